"""Command-line pipeline: solve, extract boundaries, simulate, verify.

Subcommands share one JSON configuration (see :mod:`reinsdiv.config`): the
subcommand selects how far the pipeline runs and which artifacts are written.

    reinsdiv solve      --config run.json [--out DIR]            solution.csv
    reinsdiv boundaries --config run.json [--out DIR]            + boundary CSVs, figures
    reinsdiv simulate   --config run.json [--out DIR] [--seed N] + policy_run.json
    reinsdiv verify-all --config run.json [--out DIR] [--seed N] everything + invariant suites

Every run writes ``manifest.json`` echoing the configuration, listing the
artifacts, and recording each executed invariant suite with its worst
measured defect.  Exit codes: 0 success, 2 invalid configuration, 3 solver
non-convergence, 4 invariant breach.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .boundaries import compute_free_boundaries, discrete_claim_boundaries
from .claims import NoRoot, lambda_root, moments
from .config import ConfigError, RunConfig, load_config
from .pde import (
    InvariantBreach,
    NonConvergence,
    SolutionField,
    TOL_INV,
    hjb_residual,
    invariant_defects,
    solve_penalized,
    trivial_solution,
)
from .report import (
    render_figures,
    write_boundary_csvs,
    write_regions_csv,
    write_reinsurance_bounds_csv,
    write_solution_csv,
)
from .simulate import simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_INVARIANT = 4


def _config_echo(cfg: RunConfig) -> dict:
    return {
        "mode": cfg.mode,
        "model": {"gamma": cfg.params.gamma, "c": cfg.params.c, "T": cfg.params.T},
        "distribution": {
            "kind": cfg.dist.kind,
            "atoms": [list(a) for a in cfg.dist.atoms],
            "scale": cfg.dist.scale,
        },
        "grid": dict(cfg.grid_spec),
        "simulation": None if cfg.sim is None else dataclasses.asdict(cfg.sim),
        "tol_fb": cfg.tol_fb,
        "z_levels": None if cfg.z_levels is None else list(cfg.z_levels),
        "outputs": dataclasses.asdict(cfg.outputs),
    }


def _suite(worst: float, tol: float) -> dict:
    return {"worst_defect": worst, "tolerance": tol, "pass": bool(worst <= tol)}


def _solve_field(cfg: RunConfig, verify: bool) -> tuple[SolutionField, bool]:
    """Solve the gradient problem, falling back to the closed form when trivial."""
    grid = cfg.build_grid()
    try:
        lambda_root(cfg.dist, cfg.params)
    except NoRoot:
        return trivial_solution(cfg.params, grid), True
    return solve_penalized(cfg.dist, cfg.params, grid, verify=verify), False


def run_mode(cfg: RunConfig, mode: str, out_dir: Path) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "config": _config_echo(cfg),
        "mode": mode,
        "versions": {
            "reinsdiv": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "artifacts": [],
        "invariant_suites": {},
    }
    artifacts: list[str] = manifest["artifacts"]
    suites: dict = manifest["invariant_suites"]

    field, trivial = _solve_field(cfg, verify=(mode == "verify-all"))
    mu1, mu2 = moments(cfg.dist)
    manifest["model_quantities"] = {
        "mu1": mu1,
        "mu2": mu2,
        "lambda": None if math.isinf(field.lam) else field.lam,
        "trivial_regime": trivial,
        "x2": None,
    }

    write_solution_csv(out_dir / "solution.csv", field)
    artifacts.append("solution.csv")

    if mode == "verify-all":
        defects = invariant_defects(field, cfg.dist, cfg.params)
        for name, worst in defects.items():
            suites[f"solution.{name}"] = _suite(worst, TOL_INV)
        res = hjb_residual(field, cfg.dist, cfg.params)
        manifest["complementarity_defect"] = float(np.max(np.abs(res)))

    if mode in ("boundaries", "simulate", "verify-all"):
        bnd = compute_free_boundaries(
            field, cfg.dist, cfg.params, z_levels=cfg.z_levels, tol_fb=cfg.tol_fb
        )
        manifest["model_quantities"]["x2"] = bnd.x2
        artifacts.extend(write_boundary_csvs(out_dir, bnd))
        write_reinsurance_bounds_csv(out_dir / "reinsurance_bounds.csv", bnd, cfg.params.c)
        artifacts.append("reinsurance_bounds.csv")
        z_levels = sorted(bnd.K) if bnd.K else []
        if z_levels:
            n_tau, n_x = cfg.outputs.region_grid
            write_regions_csv(out_dir / "regions.csv", field, bnd, z_levels, n_tau, n_x)
            artifacts.append("regions.csv")
        if cfg.outputs.figures:
            artifacts.extend(render_figures(out_dir, field, bnd, cfg.params.c))

        if mode == "verify-all":
            dx = field.grid.dx
            suites["boundary.d_monotone_raw"] = _suite(bnd.raw_monotonicity_violation, dx)
            suites["boundary.d_below_x2"] = _suite(
                float(max(np.max(bnd.d) - bnd.x2, 0.0)), dx
            )
            suites["boundary.K_below_d"] = _suite(
                max(
                    (float(np.max(curve - bnd.d)) for curve in bnd.K.values()),
                    default=0.0,
                ),
                0.0,
            )
            if math.isfinite(field.lam):
                lam_inv = 1.0 / field.lam
                worst_bound = 0.0
                for z, curve in bnd.K.items():
                    cap = max(z - lam_inv, 0.0) / (2.0 * cfg.params.c)
                    worst_bound = max(worst_bound, float(np.max(curve) - cap))
                suites["boundary.K_universal_bound"] = _suite(max(worst_bound, 0.0), dx)
            if cfg.dist.kind in ("discrete", "point_mass"):
                disc = discrete_claim_boundaries(field, cfg.dist)
                below = disc.curves[: disc.first_covered]
                worst_zero = max((float(np.max(c_)) for c_ in below), default=0.0)
                suites["boundary.K_zero_below_lambda"] = _suite(worst_zero, 0.0)

    if mode in ("simulate", "verify-all") and cfg.sim is not None:
        per_path = out_dir / "paths.csv" if cfg.outputs.per_path_csv else None
        run = simulate(field, cfg.dist, cfg.params, cfg.sim, per_path_csv=per_path)
        (out_dir / "policy_run.json").write_text(
            json.dumps(run.to_json_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        artifacts.append("policy_run.json")
        if per_path is not None:
            artifacts.append("paths.csv")
        if mode == "verify-all":
            band = 3.0 * run.stderr + 0.02 * abs(run.pde_value)
            suites["simulation.value_consistency"] = _suite(
                abs(run.estimate - run.pde_value), band
            )

    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return EXIT_OK


def run(config_path: str | Path, *, mode: str | None = None, out_dir: str | Path | None = None,
        seed: int | None = None) -> int:
    """Execute a configured pipeline; returns the process exit code."""
    try:
        cfg = load_config(config_path)
        if seed is not None:
            if cfg.sim is None:
                raise ConfigError("simulation", "--seed given but no simulation section")
            cfg = dataclasses.replace(cfg, sim=dataclasses.replace(cfg.sim, seed=seed))
        effective_mode = mode or cfg.mode
        out = Path(out_dir) if out_dir is not None else Path(cfg.outputs.directory)
        if effective_mode in ("simulate",) and cfg.sim is None:
            raise ConfigError("simulation", "mode 'simulate' requires a simulation section")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_mode(cfg, effective_mode, out)
    except NonConvergence as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except InvariantBreach as exc:
        print(f"solution invariant breach: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reinsdiv",
        description="Optimal reinsurance / dividend-payout solver and verifier",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, descr in (
        ("solve", "solve the gradient problem and write the solution table"),
        ("boundaries", "solve and extract payout/reinsurance barriers"),
        ("simulate", "solve, extract barriers, and Monte-Carlo the policy"),
        ("verify-all", "run everything plus the invariant suites"),
    ):
        p = sub.add_parser(name, help=descr)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="simulation seed override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.config, mode=args.command, out_dir=args.out, seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())
