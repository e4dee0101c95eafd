"""Free-boundary extraction and region classification.

Two families of curves split the surplus-time strip: the payout barrier
``d(tau)`` (the largest surplus at which the marginal value of reserves still
exceeds one) and, per claim size z, the reinsurance barrier ``K(z, tau)``
(the largest surplus at which the risk ratio -v_xx/v_x still exceeds 1/z).
Below K the claim is partially ceded, between K and d nothing is done, above
d the excess is paid out.  The extraction works on the discrete gradient
field: threshold crossings of u and of the cached ratio, linearly
interpolated between nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .claims import ClaimDistribution, ModelParams, dividend_bound
from .pde import SolutionField, TOL_INV

#: threshold above 1 defining the discrete payout boundary; large against
#: penalty leakage, small against interior values of u - 1
DEFAULT_TOL_FB = 1e-4


class OutOfRegion(Exception):
    """Feedback-form query in the payout region, where the form does not apply."""


class Region(str, Enum):
    REINSURANCE_COVERED = "reinsurance_covered"
    NON_ACTION = "non_action"
    DIVIDEND_PAYOUT = "dividend_payout"


@dataclass(frozen=True)
class FreeBoundaries:
    """Extracted barrier curves over the solve's tau grid.

    ``d`` is the isotonic (non-decreasing) projection of the raw extraction
    ``d_raw``; the raw curve is kept so grid noise can be measured against
    the monotonicity the theory guarantees.  ``K`` maps each requested claim
    size to its barrier curve.
    """

    tau: np.ndarray
    d: np.ndarray
    d_raw: np.ndarray
    K: dict[float, np.ndarray]
    x2: float
    lam: float

    def d_at(self, tau) -> np.ndarray | float:
        out = np.interp(tau, self.tau, self.d)
        return float(out) if np.isscalar(tau) else out

    def K_at(self, z: float, tau) -> np.ndarray | float:
        out = np.interp(tau, self.tau, self.K[z])
        return float(out) if np.isscalar(tau) else out

    @property
    def raw_monotonicity_violation(self) -> float:
        """Largest drop of the raw payout curve below its running maximum."""
        return float(np.max(np.maximum.accumulate(self.d_raw) - self.d_raw))


def isotonic_increasing(values: np.ndarray) -> np.ndarray:
    """L2 projection onto non-decreasing sequences (pool adjacent violators)."""
    v = np.asarray(values, dtype=float)
    level = list(v)
    weight = [1.0] * len(level)
    out: list[float] = []
    wts: list[float] = []
    for val, w in zip(level, weight):
        out.append(val)
        wts.append(w)
        while len(out) > 1 and out[-2] > out[-1]:
            v2, w2 = out.pop(), wts.pop()
            v1, w1 = out.pop(), wts.pop()
            out.append((v1 * w1 + v2 * w2) / (w1 + w2))
            wts.append(w1 + w2)
    return np.repeat(out, [int(w) for w in wts])


def _last_crossing(rows: np.ndarray, x: np.ndarray, threshold: float) -> np.ndarray:
    """Per row, the interpolated abscissa where the profile falls to threshold.

    Profiles are non-increasing in x; returns 0 where no node exceeds the
    threshold and x[-1] where even the last node does.
    """
    n_rows, n = rows.shape
    above = rows > threshold
    any_above = above.any(axis=1)
    last = np.where(any_above, n - 1 - np.argmax(above[:, ::-1], axis=1), 0)
    out = np.zeros(n_rows)
    idx = np.arange(n_rows)
    interior = any_above & (last < n - 1)
    li = last[interior]
    f0 = rows[idx[interior], li]
    f1 = rows[idx[interior], li + 1]
    dx = x[1] - x[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(f0 > f1, (f0 - threshold) / (f0 - f1), 0.0)
    out[interior] = x[li] + dx * frac
    out[any_above & (last == n - 1)] = x[-1]
    return out


def extract_dividend_boundary(field: SolutionField, tol_fb: float = DEFAULT_TOL_FB) -> np.ndarray:
    """Raw payout boundary: crossing of u through 1 + tol_fb, per time level."""
    return _last_crossing(field.u, field.x, 1.0 + tol_fb)


def extract_reinsurance_boundary(field: SolutionField, z: float) -> np.ndarray:
    """Reinsurance boundary for claim size z: crossing of -u_x/u through 1/z.

    Identically zero for z at or below 1/lambda (no claim that small is ever
    ceded); the comparison carries a 10*TOL_INV relative guard so threshold
    ties resolve to the uncovered side.
    """
    if z <= 0:
        raise ValueError(f"claim size must be > 0, got {z}")
    lam_inv = 0.0 if math.isinf(field.lam) else 1.0 / field.lam
    if z <= lam_inv * (1.0 + 10.0 * TOL_INV):
        return np.zeros(len(field.tau))
    return _last_crossing(field.y, field.x, 1.0 / z)


@dataclass(frozen=True)
class DiscreteBoundaries:
    """Per-atom reinsurance boundaries for an atomic claim law.

    ``first_covered`` is the index of the smallest atom exceeding 1/lambda;
    curves for smaller atoms are identically zero.
    """

    first_covered: int
    curves: list[np.ndarray]


def discrete_claim_boundaries(field: SolutionField, dist: ClaimDistribution) -> DiscreteBoundaries:
    """Reinsurance boundary per atom of a discrete claim law."""
    if dist.kind not in ("discrete", "point_mass"):
        raise ValueError(f"atomic claim law required, got kind={dist.kind!r}")
    zs = np.array([a[0] for a in dist.atoms])
    lam_inv = 0.0 if math.isinf(field.lam) else 1.0 / field.lam
    i0 = int(np.searchsorted(zs, lam_inv, side="right"))
    curves = [extract_reinsurance_boundary(field, float(z)) for z in zs]
    return DiscreteBoundaries(first_covered=i0, curves=curves)


def compute_free_boundaries(
    field: SolutionField,
    dist: ClaimDistribution,
    params: ModelParams,
    z_levels=None,
    tol_fb: float = DEFAULT_TOL_FB,
) -> FreeBoundaries:
    """Extract the payout curve and the reinsurance curves for given z levels.

    For atomic laws the default z levels are the atoms; for continuous laws,
    1.5/lambda and 3/lambda (one curve inside the covered range, one well
    above the no-cede threshold).
    """
    d_raw = extract_dividend_boundary(field, tol_fb)
    if z_levels is None:
        if dist.kind in ("discrete", "point_mass"):
            z_levels = [a[0] for a in dist.atoms]
        elif math.isfinite(field.lam):
            z_levels = [1.5 / field.lam, 3.0 / field.lam]
        else:
            z_levels = []
    K = {float(z): extract_reinsurance_boundary(field, float(z)) for z in z_levels}
    return FreeBoundaries(
        tau=field.tau,
        d=isotonic_increasing(d_raw),
        d_raw=d_raw,
        K=K,
        x2=dividend_bound(dist, params),
        lam=field.lam,
    )


def classify(
    field: SolutionField,
    x: float,
    tau: float,
    z: float,
    *,
    boundaries: FreeBoundaries | None = None,
    dist: ClaimDistribution | None = None,
    params: ModelParams | None = None,
    tol_fb: float = DEFAULT_TOL_FB,
) -> Region:
    """Which of the three regions (x, tau) falls in for claim size z.

    Pass a precomputed ``boundaries`` when classifying many points; otherwise
    ``dist`` and ``params`` are required to extract the curves on the fly.
    """
    if boundaries is None:
        if dist is None or params is None:
            raise ValueError("either boundaries or (dist, params) must be given")
        boundaries = compute_free_boundaries(field, dist, params, z_levels=[z], tol_fb=tol_fb)
    d_here = boundaries.d_at(tau)
    if x >= d_here:
        return Region.DIVIDEND_PAYOUT
    if z in boundaries.K:
        K_here = boundaries.K_at(z, tau)
    else:
        K_here = float(np.interp(tau, field.tau, extract_reinsurance_boundary(field, z)))
    if x < K_here:
        return Region.REINSURANCE_COVERED
    return Region.NON_ACTION


def ceded_loss(
    field: SolutionField,
    x: float,
    tau: float,
    z: float,
    *,
    boundaries: FreeBoundaries | None = None,
    dist: ClaimDistribution | None = None,
    params: ModelParams | None = None,
) -> float:
    """Optimal ceded amount max(z - 1/yhat, 0) at (x, tau) in the no-payout region.

    yhat is the interpolated risk ratio; the cap 1/yhat never falls below
    1/lambda, so the cession never reaches the full claim.  Raises
    OutOfRegion at or above the payout barrier, where the feedback form does
    not apply.
    """
    if boundaries is None:
        if dist is None or params is None:
            raise ValueError("either boundaries or (dist, params) must be given")
        boundaries = compute_free_boundaries(field, dist, params, z_levels=[], tol_fb=DEFAULT_TOL_FB)
    if x >= boundaries.d_at(tau):
        raise OutOfRegion(f"(x={x}, tau={tau}) lies in the payout region")
    yhat = field.ratio_at(x, tau)
    if math.isfinite(field.lam):
        yhat = min(max(yhat, 0.0), field.lam)
    if yhat <= 0.0:
        return 0.0
    return max(z - 1.0 / yhat, 0.0)
