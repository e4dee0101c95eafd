"""Coarse controlled-Markov-chain oracle for the value function.

Independent cross-check of the PDE solve: the controlled surplus diffusion is
replaced by a birth-death chain on a uniform lattice with locally consistent
transition probabilities (Kushner-Dupuis style), the retention control is
discretized to a small geometric menu of risk ratios, and the payout control
becomes an instantaneous downward jump that earns the jump size.  Backward
induction over the horizon then yields lattice values that must agree with
the PDE solution to within the chain's O(h) accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .claims import (
    ClaimDistribution,
    ModelParams,
    dividend_bound,
    lambda_root,
    moments,
    retained_moments,
    NoRoot,
)


@dataclass(frozen=True)
class LatticeValue:
    """Backward-induction values on the chain lattice, all time levels kept."""

    x: np.ndarray
    tau: np.ndarray
    values: np.ndarray  # shape (len(tau), len(x))
    dt: float

    def value_at(self, x: float, tau: float) -> float:
        """Bilinear interpolation of the lattice values."""
        t = min(max(float(tau), 0.0), float(self.tau[-1]))
        s = t / self.dt
        n0 = min(int(s), len(self.tau) - 2)
        w = s - n0
        row = (1.0 - w) * self.values[n0] + w * self.values[n0 + 1]
        return float(np.interp(x, self.x, row))


def mca_oracle(
    dist: ClaimDistribution,
    params: ModelParams,
    coarse_levels: int,
    *,
    n_controls: int = 16,
    L: float | None = None,
    horizon: float | None = None,
) -> LatticeValue:
    """Value table by backward induction on a locally consistent chain.

    ``coarse_levels`` surplus points span [0, L]; the retention menu is
    ``n_controls`` ratios geometric in [lambda/8, 8 lambda], each mapped to
    drift ``B(y) - gamma`` and variance ``2 A(y)``.  The time step is the
    largest one keeping every stay-probability non-negative.  State 0 is
    absorbing (ruin), the top state is resolved by the payout jump.
    """
    if coarse_levels < 2:
        raise ValueError("coarse_levels must be >= 2")
    T = params.T if horizon is None else float(horizon)
    gamma, c = params.gamma, params.c
    mu1, _ = moments(dist)
    try:
        lam = lambda_root(dist, params)
    except NoRoot:
        lam = 1.0  # menu irrelevant: the payout jump dominates everywhere

    if L is None:
        x2 = dividend_bound(dist, params)
        L = 1.25 * x2 if x2 > 0 else max(1.0, 8.0 * mu1 / c)
    h = L / (coarse_levels - 1)
    xg = np.arange(coarse_levels) * h

    ys = np.geomspace(lam / 8.0, 8.0 * lam, n_controls)
    A, B = retained_moments(dist, ys)
    drift = B - gamma
    var = 2.0 * A

    dt_max = h * h / float(np.max(var + h * np.abs(drift)))
    n_steps = max(1, int(math.ceil(T / dt_max)))
    dt = T / n_steps

    p_up = (A + h * np.maximum(drift, 0.0)) * dt / h**2
    p_dn = (A + h * np.maximum(-drift, 0.0)) * dt / h**2
    p_stay = 1.0 - p_up - p_dn
    disc = math.exp(-c * dt)

    values = np.empty((n_steps + 1, coarse_levels))
    values[0] = xg  # tau = 0: everything is paid out at once
    V = values[0].copy()
    for m in range(1, n_steps + 1):
        cont = np.full(coarse_levels, -np.inf)
        interior = (
            p_dn[:, None] * V[None, :-2]
            + p_stay[:, None] * V[None, 1:-1]
            + p_up[:, None] * V[None, 2:]
        )
        cont[1:-1] = disc * interior.max(axis=0)
        cont[0] = 0.0  # ruin is absorbing
        # payout jump: V_k = max(cont_k, V_{k-1} + h); unrolled,
        # V_k = x_k + max_{j<=k} (cont_j - x_j), one accumulate pass
        V = np.maximum.accumulate(cont - xg) + xg
        values[m] = V

    tau = np.linspace(0.0, T, n_steps + 1)
    return LatticeValue(x=xg, tau=tau, values=values, dt=dt)
