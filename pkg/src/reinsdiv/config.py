"""Run configuration: JSON schema, validation, and construction of model objects.

A run is described by one JSON document::

    {
      "mode": "verify-all",                        // solve | boundaries | simulate | verify-all
      "model": {"gamma": 0.25, "c": 0.1, "T": 1.0},
      "distribution": {"kind": "point_mass", "atoms": [[1.0, 1.0]]},
      "grid": {"Nx": 512, "Nt": 512, "epsilon": 0.01},   // "L": number, or omit for auto
      "simulation": {"n_paths": 10000, "seed": 7, "x0": 1.0, "t0": 0.0},  // optional
      "boundaries": {"tol_fb": 1e-4, "z_levels": [0.5, 2.0]},             // optional
      "outputs": {"directory": "out", "figures": true,
                  "per_path_csv": false, "region_grid": [17, 33]}         // optional
    }

Distribution spec: atomic kinds carry ``atoms`` = [[z, p], ...] sorted by z;
``exponential`` and ``uniform`` carry ``scale`` (mean, respectively upper
endpoint).  Validation failures raise ConfigError with the dotted path of the
offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .claims import ClaimDistribution, ModelParams
from .pde import Grid
from .simulate import SimConfig

MODES = ("solve", "boundaries", "simulate", "verify-all")


class ConfigError(Exception):
    """Invalid run configuration; the message carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    figures: bool = True
    per_path_csv: bool = False
    region_grid: tuple[int, int] = (17, 33)  # (n_tau, n_x) sub-grid for the region map


@dataclass(frozen=True)
class RunConfig:
    mode: str
    dist: ClaimDistribution
    params: ModelParams
    grid_spec: dict
    sim: SimConfig | None
    tol_fb: float
    z_levels: tuple[float, ...] | None
    outputs: OutputSpec

    def build_grid(self) -> Grid:
        """Resolve the grid spec (auto L unless given explicitly)."""
        spec = dict(self.grid_spec)
        L = spec.pop("L", None)
        if L is None:
            return Grid.auto(self.dist, self.params, **spec)
        return Grid(L=L, **spec)


def _need(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return obj[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(obj: dict, known: tuple[str, ...], path: str):
    for key in obj:
        if key not in known:
            raise ConfigError(f"{path}.{key}", f"unknown field (known: {', '.join(known)})")


def parse_distribution(spec, path: str = "distribution") -> ClaimDistribution:
    spec = _mapping(spec, path)
    _reject_unknown(spec, ("kind", "atoms", "scale"), path)
    kind = _need(spec, "kind", path)
    if kind not in ("point_mass", "discrete", "exponential", "uniform"):
        raise ConfigError(f"{path}.kind", f"unsupported kind {kind!r}")
    try:
        if kind in ("point_mass", "discrete"):
            raw = _need(spec, "atoms", path)
            if not isinstance(raw, list) or not raw:
                raise ConfigError(f"{path}.atoms", "expected a non-empty list of [z, p] pairs")
            atoms = []
            for i, pair in enumerate(raw):
                if not isinstance(pair, list) or len(pair) != 2:
                    raise ConfigError(f"{path}.atoms[{i}]", f"expected [z, p], got {pair!r}")
                atoms.append(
                    (_number(pair[0], f"{path}.atoms[{i}].z"), _number(pair[1], f"{path}.atoms[{i}].p"))
                )
            return ClaimDistribution(kind, atoms=tuple(atoms))
        return ClaimDistribution(kind, scale=_number(_need(spec, "scale", path), f"{path}.scale"))
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def parse_model(spec, path: str = "model") -> ModelParams:
    spec = _mapping(spec, path)
    _reject_unknown(spec, ("gamma", "c", "T"), path)
    gamma = _number(_need(spec, "gamma", path), f"{path}.gamma")
    c = _number(_need(spec, "c", path), f"{path}.c")
    T = _number(_need(spec, "T", path), f"{path}.T")
    try:
        return ModelParams(gamma=gamma, c=c, T=T)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def parse_grid_spec(spec, path: str = "grid") -> dict:
    spec = _mapping(spec, path)
    _reject_unknown(spec, ("L", "Nx", "Nt", "epsilon", "smoothing"), path)
    out: dict = {}
    if "L" in spec and spec["L"] is not None and spec["L"] != "auto":
        out["L"] = _number(spec["L"], f"{path}.L")
    out["Nx"] = _integer(spec.get("Nx", 512), f"{path}.Nx")
    out["Nt"] = _integer(spec.get("Nt", 512), f"{path}.Nt")
    out["epsilon"] = _number(spec.get("epsilon", 0.01), f"{path}.epsilon")
    if spec.get("smoothing") is not None:
        out["smoothing"] = _number(spec["smoothing"], f"{path}.smoothing")
    return out


def parse_simulation(spec, path: str = "simulation") -> SimConfig:
    spec = _mapping(spec, path)
    _reject_unknown(spec, ("n_paths", "dt", "seed", "x0", "t0"), path)
    kwargs: dict = {}
    if "n_paths" in spec:
        kwargs["n_paths"] = _integer(spec["n_paths"], f"{path}.n_paths")
    if spec.get("dt") is not None:
        kwargs["dt"] = _number(spec["dt"], f"{path}.dt")
    if "seed" in spec:
        kwargs["seed"] = _integer(spec["seed"], f"{path}.seed")
    if "x0" in spec:
        kwargs["x0"] = _number(spec["x0"], f"{path}.x0")
    if "t0" in spec:
        kwargs["t0"] = _number(spec["t0"], f"{path}.t0")
    try:
        return SimConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def parse_outputs(spec, path: str = "outputs") -> OutputSpec:
    spec = _mapping(spec, path)
    _reject_unknown(spec, ("directory", "figures", "per_path_csv", "region_grid"), path)
    kwargs: dict = {}
    if "directory" in spec:
        if not isinstance(spec["directory"], str):
            raise ConfigError(f"{path}.directory", "expected a string")
        kwargs["directory"] = spec["directory"]
    for flag in ("figures", "per_path_csv"):
        if flag in spec:
            if not isinstance(spec[flag], bool):
                raise ConfigError(f"{path}.{flag}", "expected a boolean")
            kwargs[flag] = spec[flag]
    if "region_grid" in spec:
        rg = spec["region_grid"]
        if not (isinstance(rg, list) and len(rg) == 2):
            raise ConfigError(f"{path}.region_grid", "expected [n_tau, n_x]")
        kwargs["region_grid"] = (
            _integer(rg[0], f"{path}.region_grid[0]"),
            _integer(rg[1], f"{path}.region_grid[1]"),
        )
        if any(v < 2 for v in kwargs["region_grid"]):
            raise ConfigError(f"{path}.region_grid", "entries must be >= 2")
    return OutputSpec(**kwargs)


def parse_config(doc: dict) -> RunConfig:
    doc = _mapping(doc, "<root>")
    _reject_unknown(
        doc,
        ("mode", "model", "distribution", "grid", "simulation", "boundaries", "outputs"),
        "<root>",
    )
    mode = doc.get("mode", "verify-all")
    if mode not in MODES:
        raise ConfigError("mode", f"expected one of {MODES}, got {mode!r}")
    dist = parse_distribution(_need(doc, "distribution", "<root>"))
    params = parse_model(_need(doc, "model", "<root>"))
    grid_spec = parse_grid_spec(doc.get("grid", {}))
    sim = parse_simulation(doc["simulation"]) if doc.get("simulation") is not None else None

    tol_fb = 1e-4
    z_levels = None
    if doc.get("boundaries") is not None:
        bspec = _mapping(doc["boundaries"], "boundaries")
        _reject_unknown(bspec, ("tol_fb", "z_levels"), "boundaries")
        if "tol_fb" in bspec:
            tol_fb = _number(bspec["tol_fb"], "boundaries.tol_fb")
            if not tol_fb > 0:
                raise ConfigError("boundaries.tol_fb", "must be > 0")
        if bspec.get("z_levels") is not None:
            raw = bspec["z_levels"]
            if not isinstance(raw, list):
                raise ConfigError("boundaries.z_levels", "expected a list of claim sizes")
            z_levels = tuple(
                _number(zv, f"boundaries.z_levels[{i}]") for i, zv in enumerate(raw)
            )
            for i, zv in enumerate(z_levels):
                if not zv > 0:
                    raise ConfigError(f"boundaries.z_levels[{i}]", "must be > 0")
    outputs = parse_outputs(doc.get("outputs", {}))

    # grid constraints that need the model: validate eagerly for early errors
    try:
        cfg = RunConfig(
            mode=mode,
            dist=dist,
            params=params,
            grid_spec=grid_spec,
            sim=sim,
            tol_fb=tol_fb,
            z_levels=z_levels,
            outputs=outputs,
        )
        cfg.build_grid()
    except ValueError as exc:
        raise ConfigError("grid", str(exc)) from exc
    return cfg


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON run configuration."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {p}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc)
