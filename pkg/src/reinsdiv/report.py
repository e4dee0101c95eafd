"""Deterministic file outputs: delimited solution/boundary data and figures.

Every float is written as ``%.12e`` with LF line endings and UTF-8 encoding
so that repeated runs with the same configuration are byte-identical.  The
figure path renders the barrier geometry with matplotlib to PNG files next to
the CSV data: the payout barrier against its constant bound, the nested
reinsurance barriers with their universal linear bound, and the region map.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .boundaries import FreeBoundaries, Region, classify
from .pde import SolutionField

FMT = "%.12e"


def _fmt(value: float) -> str:
    return FMT % value


def write_solution_csv(path: str | Path, field: SolutionField) -> None:
    """One row per grid node: tau, x, u, v, y (tau-major order)."""
    n_tau, n_x = field.u.shape
    tau_col = np.repeat(field.tau, n_x)
    x_col = np.tile(field.x, n_tau)
    table = np.column_stack(
        [tau_col, x_col, field.u.ravel(), field.v.ravel(), field.y.ravel()]
    )
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("tau,x,u,v,y\n")
        np.savetxt(fh, table, fmt=FMT, delimiter=",", newline="\n")


def write_curve_csv(path: str | Path, header: tuple[str, str], tau: np.ndarray, curve: np.ndarray) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, np.column_stack([tau, curve]), fmt=FMT, delimiter=",", newline="\n")


def _z_tag(z: float) -> str:
    return f"{z:g}"


def write_boundary_csvs(out_dir: Path, bnd: FreeBoundaries) -> list[str]:
    """Payout curve, one reinsurance curve per z, and the constant bounds."""
    written = []
    write_curve_csv(out_dir / "dividend_boundary.csv", ("tau", "d"), bnd.tau, bnd.d)
    written.append("dividend_boundary.csv")
    for z, curve in sorted(bnd.K.items()):
        name = f"reinsurance_boundary_{_z_tag(z)}.csv"
        write_curve_csv(out_dir / name, ("tau", "K"), bnd.tau, curve)
        written.append(name)
    return written


def write_reinsurance_bounds_csv(
    path: str | Path, bnd: FreeBoundaries, c: float
) -> None:
    """Figure data: the universal linear bound (z - 1/lambda)/(2c) per z level."""
    lam_inv = 0.0 if math.isinf(bnd.lam) else 1.0 / bnd.lam
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("z,K_upper_bound\n")
        for z in sorted(bnd.K):
            bound = max(z - lam_inv, 0.0) / (2.0 * c)
            fh.write(f"{_fmt(z)},{_fmt(bound)}\n")


def write_regions_csv(
    path: str | Path,
    field: SolutionField,
    bnd: FreeBoundaries,
    z_levels,
    n_tau: int,
    n_x: int,
) -> None:
    """Region label on a (tau, x, z) sub-grid: tau, x, z, region."""
    taus = np.linspace(field.tau[0], field.tau[-1], n_tau)
    xs = np.linspace(field.x[0], field.x[-1], n_x)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write("tau,x,z,region\n")
        for tau in taus:
            for x in xs:
                for z in z_levels:
                    region = classify(field, float(x), float(tau), float(z), boundaries=bnd)
                    fh.write(f"{_fmt(tau)},{_fmt(x)},{_fmt(z)},{region.value}\n")


def _new_axes(title: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=130)
    ax.set_title(title)
    ax.set_xlabel("surplus x")
    ax.set_ylabel("time to maturity tau")
    return fig, ax


def plot_dividend_boundary(path: str | Path, bnd: FreeBoundaries) -> None:
    fig, ax = _new_axes("dividend-payout barrier")
    ax.plot(bnd.d, bnd.tau, "k-", lw=1.8, label="d(tau)")
    if bnd.x2 > 0:
        ax.axvline(bnd.x2, color="0.5", ls="--", lw=1.0, label="x2 bound")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_reinsurance_boundaries(path: str | Path, bnd: FreeBoundaries, c: float) -> None:
    fig, ax = _new_axes("reinsurance barriers (nested in z) and payout barrier")
    lam_inv = 0.0 if math.isinf(bnd.lam) else 1.0 / bnd.lam
    for z, curve in sorted(bnd.K.items()):
        (line,) = ax.plot(curve, bnd.tau, lw=1.4, label=f"K(z={z:g})")
        bound = (z - lam_inv) / (2.0 * c)
        if bound > 0:
            ax.axvline(bound, color=line.get_color(), ls=":", lw=0.9)
    ax.plot(bnd.d, bnd.tau, "k-", lw=1.8, label="d(tau)")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_region_map(
    path: str | Path,
    field: SolutionField,
    bnd: FreeBoundaries,
    z: float,
    n_tau: int = 120,
    n_x: int = 240,
) -> None:
    """Shaded covered / non-action / payout decomposition for one claim size."""
    x_max = bnd.x2 * 1.15 if bnd.x2 > 0 else field.x[-1]
    taus = np.linspace(field.tau[0], field.tau[-1], n_tau)
    xs = np.linspace(0.0, x_max, n_x)
    d_vals = np.interp(taus, bnd.tau, bnd.d)
    if z in bnd.K:
        K_curve = bnd.K[z]
    else:
        from .boundaries import extract_reinsurance_boundary

        K_curve = extract_reinsurance_boundary(field, z)
    K_vals = np.interp(taus, bnd.tau, K_curve)
    codes = np.full((n_tau, n_x), 1, dtype=int)
    codes[xs[None, :] >= d_vals[:, None]] = 2
    codes[xs[None, :] < K_vals[:, None]] = 0
    fig, ax = _new_axes(f"regions for claim size z={z:g}")
    cmap = matplotlib.colors.ListedColormap(["#bcd4e6", "#f1f1f1", "#f5c6aa"])
    ax.pcolormesh(xs, taus, codes, cmap=cmap, vmin=0, vmax=2, shading="nearest")
    ax.plot(K_vals, taus, "b-", lw=1.4, label=f"K(z={z:g})")
    ax.plot(d_vals, taus, "k-", lw=1.8, label="d(tau)")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_figures(
    out_dir: Path, field: SolutionField, bnd: FreeBoundaries, c: float
) -> list[str]:
    """All figure files for a run; returns the file names written."""
    written = []
    plot_dividend_boundary(out_dir / "dividend_boundary.png", bnd)
    written.append("dividend_boundary.png")
    if bnd.K:
        plot_reinsurance_boundaries(out_dir / "reinsurance_boundaries.png", bnd, c)
        written.append("reinsurance_boundaries.png")
        z_big = max(bnd.K)
        plot_region_map(out_dir / "regions.png", field, bnd, z_big)
        written.append("regions.png")
    return written
