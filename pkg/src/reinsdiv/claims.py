"""Claim-size laws and the retained-moment calculus they induce.

Under an excess-of-loss contract with retention cap ``w = 1/y`` the insurer
keeps ``min(z, w)`` of an incoming claim ``z``.  Everything the surplus
dynamics need from the claim law ``F`` reduces to two truncated moments,

    A(y) = (1/2) E[min(Z, 1/y)^2] = int_0^{1/y} z (1 - F(z)) dz   (y > 0),
    B(y) =       E[min(Z, 1/y)]   = int_0^{1/y} (1 - F(z)) dz     (y > 0),

with the saturated values ``A = mu2/2`` and ``B = mu1`` for ``y <= 0`` (no
cap).  Both are non-increasing in ``y`` and are evaluated here in closed form
per distribution kind; numerical quadrature is used only as a test oracle.

The drift function ``f(y) = -y A(y) + B(y) - gamma`` is strictly decreasing
with ``f(0+) = mu1 - gamma`` and ``f(inf) = -gamma``; for ``gamma < mu1`` it
has a unique positive root ``lambda`` which fixes the reflecting ratio of the
gradient problem at the ruin boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SUPPORTED_KINDS = ("point_mass", "discrete", "exponential", "uniform")

#: kinds whose law is a finite mixture of atoms
ATOMIC_KINDS = ("point_mass", "discrete")


class NoRoot(Exception):
    """The drift function has no positive root (gamma >= mu1).

    In this regime reinsurance cannot be profitable, the value function is
    identically ``x`` and callers should use the closed-form trivial solution
    instead of the PDE solver.
    """


@dataclass(frozen=True)
class ModelParams:
    """Economic constants: reinsurance friction, discounting, horizon.

    ``gamma`` is the net cost of reinsurance (reinsurer loading minus insurer
    loading, times the mean claim), with the reinsurer loading normalized to
    one by time rescaling.
    """

    gamma: float
    c: float
    T: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0 (non-cheap reinsurance), got {self.gamma}")
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T}")


@dataclass(frozen=True)
class ClaimDistribution:
    """A claim-size law from the supported family.

    kind:   one of ``point_mass | discrete | exponential | uniform``
    atoms:  ((z_1, p_1), ..., (z_N, p_N)) for the atomic kinds, z ascending
    scale:  mean for ``exponential``, upper endpoint for ``uniform``

    Every supported kind has ``z^3 (1 - F(z))`` bounded: the atomic and
    uniform laws have compact support, and ``z^3 e^{-z/m} -> 0``.  That tail
    bound is what keeps both truncated moments finite and Lipschitz.
    """

    kind: str
    atoms: tuple[tuple[float, float], ...] = ()
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in SUPPORTED_KINDS:
            raise ValueError(f"kind must be one of {SUPPORTED_KINDS}, got {self.kind!r}")
        if self.kind in ATOMIC_KINDS:
            if not self.atoms:
                raise ValueError(f"{self.kind} distribution requires atoms")
            zs = [a[0] for a in self.atoms]
            ps = [a[1] for a in self.atoms]
            if any(z <= 0 for z in zs):
                raise ValueError(f"atom sizes must be > 0, got {zs}")
            if any(p <= 0 for p in ps):
                raise ValueError(f"atom probabilities must be > 0, got {ps}")
            if any(b <= a for a, b in zip(zs, zs[1:])):
                raise ValueError(f"atom sizes must be strictly ascending, got {zs}")
            if abs(sum(ps) - 1.0) > 1e-12:
                raise ValueError(f"atom probabilities must sum to 1, got sum={sum(ps)!r}")
            if self.kind == "point_mass" and len(self.atoms) != 1:
                raise ValueError("point_mass requires exactly one atom")
        else:
            if self.atoms:
                raise ValueError(f"{self.kind} distribution takes no atoms")
            if not self.scale > 0:
                raise ValueError(f"{self.kind} requires scale > 0, got {self.scale}")

    # -- convenience constructors -------------------------------------------------

    @classmethod
    def point_mass(cls, z: float) -> "ClaimDistribution":
        return cls("point_mass", atoms=((float(z), 1.0),))

    @classmethod
    def discrete(cls, atoms) -> "ClaimDistribution":
        return cls("discrete", atoms=tuple((float(z), float(p)) for z, p in atoms))

    @classmethod
    def exponential(cls, mean: float) -> "ClaimDistribution":
        return cls("exponential", scale=float(mean))

    @classmethod
    def uniform(cls, upper: float) -> "ClaimDistribution":
        return cls("uniform", scale=float(upper))

    # -- basic law queries ----------------------------------------------------------

    def _atom_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        z = np.array([a[0] for a in self.atoms], dtype=float)
        p = np.array([a[1] for a in self.atoms], dtype=float)
        return z, p

    @property
    def ess_sup(self) -> float:
        """Essential supremum of the claim size (inf for exponential)."""
        if self.kind in ATOMIC_KINDS:
            return self.atoms[-1][0]
        if self.kind == "uniform":
            return self.scale
        return math.inf


def survival(dist: ClaimDistribution, z) -> np.ndarray | float:
    """Survival function 1 - F(z), vectorized in z."""
    z_in = np.asarray(z, dtype=float)
    if dist.kind in ATOMIC_KINDS:
        za, p = dist._atom_arrays()
        out = (np.where(z_in[..., None] < za, p, 0.0)).sum(axis=-1)
    elif dist.kind == "exponential":
        out = np.exp(-np.maximum(z_in, 0.0) / dist.scale)
    else:
        out = np.clip(1.0 - z_in / dist.scale, 0.0, 1.0)
    out = np.where(z_in < 0, 1.0, out)
    return float(out) if np.isscalar(z) else out


def moments(dist: ClaimDistribution) -> tuple[float, float]:
    """First and second moments of the claim size, in closed form."""
    if dist.kind in ATOMIC_KINDS:
        z, p = dist._atom_arrays()
        return float((p * z).sum()), float((p * z**2).sum())
    if dist.kind == "exponential":
        m = dist.scale
        return m, 2.0 * m * m
    b = dist.scale
    return b / 2.0, b * b / 3.0


def retained_moments(dist: ClaimDistribution, y) -> tuple[np.ndarray, np.ndarray]:
    """Both truncated moments (A(y), B(y)) in one pass, vectorized in y.

    The cap is ``w = 1/y`` for y > 0 and infinite otherwise, where the
    saturated values mu2/2 and mu1 are returned exactly (bit-for-bit equal to
    ``moments``), as they are whenever the cap covers the whole support.
    """
    y_in = np.asarray(y, dtype=float)
    pos = y_in > 0
    with np.errstate(divide="ignore", over="ignore"):
        w = np.where(pos, 1.0 / np.where(pos, y_in, 1.0), np.inf)
    if dist.kind in ATOMIC_KINDS:
        z, p = dist._atom_arrays()
        wc = np.minimum(w[..., None], z)
        A = 0.5 * (p * wc**2).sum(axis=-1)
        B = (p * wc).sum(axis=-1)
    elif dist.kind == "exponential":
        m = dist.scale
        finite = np.isfinite(w)
        wf = np.where(finite, w, 0.0)
        with np.errstate(under="ignore"):
            r = np.exp(-wf / m)
        A = np.where(finite, m * m - m * (wf + m) * r, m * m)
        B = np.where(finite, m * (1.0 - r), m)
    else:
        b = dist.scale
        wc = np.minimum(w, b)
        sat = wc >= b
        A = np.where(sat, b * b / 3.0 / 2.0, 0.5 * wc**2 - wc**3 / (3.0 * b))
        B = np.where(sat, b / 2.0, wc - wc**2 / (2.0 * b))
    return A, B


def retained_A(dist: ClaimDistribution, y) -> np.ndarray | float:
    """A(y) = int_0^{1/y} z (1 - F(z)) dz for y > 0, else mu2/2."""
    A, _ = retained_moments(dist, y)
    return float(A) if np.isscalar(y) else A


def retained_B(dist: ClaimDistribution, y) -> np.ndarray | float:
    """B(y) = int_0^{1/y} (1 - F(z)) dz for y > 0, else mu1."""
    _, B = retained_moments(dist, y)
    return float(B) if np.isscalar(y) else B


def drift_f(dist: ClaimDistribution, params: ModelParams, y) -> np.ndarray | float:
    """Drift function f(y) = -y A(y) + B(y) - gamma, strictly decreasing in y > 0."""
    y_in = np.asarray(y, dtype=float)
    A, B = retained_moments(dist, y_in)
    out = -y_in * A + B - params.gamma
    return float(out) if np.isscalar(y) else out


def lambda_root(
    dist: ClaimDistribution,
    params: ModelParams,
    *,
    tol_scale: float = 1e-12,
    max_iter: int = 400,
) -> float:
    """Unique positive root of the drift function, by bisection.

    Raises NoRoot when gamma >= mu1 (then f(0+) <= 0 and the control problem
    is trivial).  The bracket [1e-8, 1] is grown geometrically on either side
    until it straddles the root; bisection is used because f is monotone and
    continuous but only piecewise-smooth for atomic claims.  The result
    satisfies |f(root)| <= tol_scale * max(1, gamma).
    """
    mu1, _ = moments(dist)
    if params.gamma >= mu1:
        raise NoRoot(f"gamma={params.gamma} >= mu1={mu1}: drift has no positive root")

    def f(yv: float) -> float:
        return float(drift_f(dist, params, yv))

    lo, hi = 1e-8, 1.0
    for _ in range(200):
        if f(lo) > 0:
            break
        lo /= 2.0
    else:
        raise NoRoot("could not bracket the root from below")
    for _ in range(200):
        if f(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NoRoot("could not bracket the root from above")

    tol = tol_scale * max(1.0, params.gamma)
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol:
            return mid
        if fm > 0:
            lo = mid
        else:
            hi = mid
    if abs(f(mid)) <= tol:
        return mid
    raise NoRoot(f"bisection did not reach |f| <= {tol} (residual {f(mid)})")


def optimal_retention(z, y) -> np.ndarray | float:
    """Retained amount h*(z, y) maximizing h -> -h^2 y / 2 + h over [0, z].

    min(z, 1/y) when the ratio y is positive, full retention z otherwise.
    """
    z_in = np.asarray(z, dtype=float)
    y_in = np.asarray(y, dtype=float)
    pos = y_in > 0
    with np.errstate(divide="ignore"):
        cap = np.where(pos, 1.0 / np.where(pos, y_in, 1.0), np.inf)
    out = np.minimum(z_in, cap)
    return float(out) if (np.isscalar(z) and np.isscalar(y)) else out


def dividend_bound(dist: ClaimDistribution, params: ModelParams) -> float:
    """Constant upper bound x2 on the dividend barrier.

    x2 = sqrt((mu1 + c*gamma) (c*mu2 + gamma^2) / (gamma c^3)), the level
    where the explicit quadratic super-solution of the gradient problem
    reaches one.  In the trivial regime gamma >= mu1 the barrier is
    identically zero, so 0 is returned.
    """
    mu1, mu2 = moments(dist)
    g, c = params.gamma, params.c
    if g >= mu1:
        return 0.0
    return math.sqrt((mu1 + c * g) * (c * mu2 + g * g) / (g * c**3))
