"""Penalized solver: ingredient functions, structural invariants, diagnostics."""

import math

import numpy as np
import pytest

from reinsdiv import (
    ClaimDistribution,
    Grid,
    ModelParams,
    NonConvergence,
    TOL_INV,
    boundary_smoother,
    hjb_residual,
    integrate_value,
    invariant_defects,
    penalty_beta,
    penalty_beta_prime,
    solve_penalized,
    trivial_solution,
)
from conftest import CASES


class TestGridValidation:
    def test_bounds(self):
        with pytest.raises(ValueError, match="Nx"):
            Grid(L=10.0, Nx=32, Nt=128, epsilon=0.01)
        with pytest.raises(ValueError, match="Nt"):
            Grid(L=10.0, Nx=128, Nt=32, epsilon=0.01)
        with pytest.raises(ValueError, match="epsilon"):
            Grid(L=10.0, Nx=128, Nt=128, epsilon=1.5)
        with pytest.raises(ValueError, match="L"):
            Grid(L=-1.0, Nx=128, Nt=128, epsilon=0.01)

    def test_thin_penalty_layer_warns(self):
        with pytest.warns(UserWarning, match="penalty layer"):
            Grid(L=100.0, Nx=64, Nt=64, epsilon=0.01)

    def test_auto_places_truncation_beyond_x2(self):
        dist, params = CASES["point"]
        grid = Grid.auto(dist, params, Nx=128, Nt=64, epsilon=0.05)
        from reinsdiv import dividend_bound

        assert grid.L == pytest.approx(1.25 * dividend_bound(dist, params))

    def test_truncation_below_x2_rejected(self):
        dist, params = CASES["point"]
        grid = Grid(L=5.0, Nx=128, Nt=64, epsilon=0.05)
        with pytest.raises(ValueError, match="x2"):
            solve_penalized(dist, params, grid)


class TestPenaltyFunction:
    def test_anchor_values(self):
        c = 0.37
        assert penalty_beta(0.01, 0.0, c) == -c
        assert penalty_beta(0.01, 0.01, c) == 0.0
        assert penalty_beta(0.01, 0.02, c) == 0.0
        assert penalty_beta(0.01, 0.005, c) == pytest.approx(-c / 8.0, rel=1e-14)

    def test_shape(self):
        eps, c = 0.02, 0.1
        s = np.linspace(-0.05, 0.05, 401)
        b = penalty_beta(eps, s, c)
        bp = penalty_beta_prime(eps, s, c)
        assert np.all(b <= 0)
        assert np.all(np.diff(b) >= 0)  # non-decreasing
        assert np.all(bp >= 0)
        assert np.all(np.diff(bp[s <= eps]) <= 1e-12)  # beta'' <= 0 up to the knee
        # derivative consistency
        h = 1e-7
        num = (penalty_beta(eps, s + h, c) - penalty_beta(eps, s - h, c)) / (2 * h)
        assert np.allclose(num, bp, atol=1e-5)

    def test_stiffens_as_eps_shrinks(self):
        c = 0.1
        assert penalty_beta(0.01, -0.01, c) < penalty_beta(0.02, -0.01, c) < -c


class TestBoundarySmoother:
    def test_anchor_values(self):
        lam = 1.7
        assert boundary_smoother(0.01, 0.0, lam) == lam
        assert boundary_smoother(0.01, 0.01, lam) == 0.0
        assert boundary_smoother(0.01, 0.5, lam) == 0.0
        assert boundary_smoother(0.01, 0.005, lam) == pytest.approx(lam / 2.0, rel=1e-14)

    def test_monotone_and_c1(self):
        lam, eps = 2.0, 0.04
        t = np.linspace(0.0, 2 * eps, 801)
        f = boundary_smoother(eps, t, lam)
        assert np.all(np.diff(f) <= 0)
        # flat tangency at both ends: |f'| <= 6 lam s (1-s) / eps, so the
        # one-sided slope over a window h must vanish linearly in h
        for h in (1e-4, 1e-6, 1e-8):
            for t0 in (0.0, eps - h):
                num = (boundary_smoother(eps, t0 + h, lam) - boundary_smoother(eps, t0, lam)) / h
                assert abs(num) <= 6.0 * lam * (h / eps) / eps * 1.01


class TestTrivialSolution:
    def test_closed_form(self):
        params = ModelParams(gamma=2.0, c=0.1, T=1.0)  # gamma = 2 mu1
        grid = Grid(L=10.0, Nx=64, Nt=64, epsilon=0.05)
        field = trivial_solution(params, grid)
        assert np.all(field.u == 1.0)
        assert np.max(np.abs(field.v - field.x[None, :])) == 0.0
        assert field.value_at(5.0, params.T) == 5.0
        assert field.value_at(0.0, 0.3) == 0.0
        # tau-independence
        assert field.value_at(5.0, 0.0) == field.value_at(5.0, params.T)

    def test_invariants_hold(self):
        dist = ClaimDistribution.point_mass(1.0)
        params = ModelParams(gamma=2.0, c=0.1, T=1.0)
        grid = Grid(L=10.0, Nx=64, Nt=64, epsilon=0.05)
        defects = invariant_defects(trivial_solution(params, grid), dist, params)
        assert max(defects.values()) == 0.0


class TestSolvePenalized:
    @pytest.mark.parametrize("name", ["point", "exp", "disc"])
    def test_invariants_desk_scale(self, small_fields, name):
        dist, params, field = small_fields[name]
        defects = invariant_defects(field, dist, params)
        worst = max(defects, key=defects.get)
        assert defects[worst] <= TOL_INV, f"{worst}: {defects[worst]}"

    def test_initial_and_far_conditions(self, small_fields):
        for _, _, field in small_fields.values():
            assert np.all(field.u[0] == 1.0)
            assert np.all(field.u[:, -1] == 1.0)
            assert np.all(field.v[:, 0] == 0.0)
            assert np.max(np.abs(field.v[0] - field.x)) == 0.0

    def test_interior_rises_above_one(self, small_fields):
        _, _, field = small_fields["point"]
        assert field.u[-1, 0] > 1.5

    def test_near_trivial_continuity(self):
        dist = ClaimDistribution.point_mass(1.0)
        params = ModelParams(gamma=1.0 - 1e-9, c=0.1, T=1.0)
        grid = Grid.auto(dist, params, Nx=128, Nt=64, epsilon=0.05)
        field = solve_penalized(dist, params, grid)
        assert np.max(np.abs(field.u - 1.0)) <= 1e-3

    def test_nonconvergence_raised(self):
        dist, params = CASES["point"]
        grid = Grid.auto(dist, params, Nx=128, Nt=64, epsilon=0.05)
        with pytest.raises(NonConvergence, match="Picard"):
            solve_penalized(dist, params, grid, max_picard=1, verify=False)

    def test_diagnostics_populated(self, small_fields):
        _, _, field = small_fields["point"]
        assert field.picard_iterations[1:].min() >= 1
        assert field.picard_residuals[1:].max() <= 1e-10


class TestIntegrateValue:
    def test_constant_gradient(self):
        params = ModelParams(gamma=2.0, c=0.1, T=1.0)
        grid = Grid(L=10.0, Nx=64, Nt=64, epsilon=0.05)
        field = trivial_solution(params, grid)
        again = integrate_value(field)
        assert np.max(np.abs(again.v - field.x[None, :])) == 0.0

    def test_idempotent(self, small_fields):
        # re-integration reproduces v up to the exact-initial-row pinning
        _, _, field = small_fields["point"]
        again = integrate_value(field)
        assert np.max(np.abs(again.v - field.v)) <= 1e-12

    def test_value_dominates_state(self, small_fields):
        for _, _, field in small_fields.values():
            assert np.min(field.v - field.x[None, :]) >= -TOL_INV


class TestInterpolation:
    def test_gradient_is_one_beyond_truncation(self, small_fields):
        _, _, field = small_fields["point"]
        assert field.gradient_at(field.x[-1] + 5.0, 0.5) == 1.0
        assert field.ratio_at(field.x[-1] + 5.0, 0.5) == 0.0

    def test_value_extends_linearly(self, small_fields):
        _, _, field = small_fields["point"]
        vL = field.value_at(field.x[-1], 0.7)
        assert field.value_at(field.x[-1] + 2.0, 0.7) == pytest.approx(vL + 2.0, rel=1e-14)

    def test_matches_nodes(self, small_fields):
        _, _, field = small_fields["point"]
        n, i = 37, 101
        assert field.value_at(field.x[i], field.tau[n]) == pytest.approx(field.v[n, i], rel=1e-12)
        assert field.gradient_at(field.x[i], field.tau[n]) == pytest.approx(field.u[n, i], rel=1e-12)


class TestHjbResidual:
    def test_complementarity_defect_small(self, small_fields):
        dist, params, field = small_fields["point"]
        res = hjb_residual(field, dist, params)
        grid = field.grid
        bound = 10.0 * (grid.epsilon + params.T / grid.Nt + grid.dx**2)
        # active PDE branch: where u clearly exceeds the obstacle
        active = field.u[1:, 1:-1] > 1.0 + grid.epsilon
        assert np.max(np.abs(res[active])) <= bound

    def test_obstacle_branch_beyond_barrier(self, small_fields):
        dist, params, field = small_fields["point"]
        res = hjb_residual(field, dist, params)
        # near the truncation u == 1 so the min picks the obstacle branch
        tail = res[-1, -10:]
        assert np.max(np.abs(tail)) <= 1e-8

    def test_trivial_regime_exact(self):
        dist = ClaimDistribution.point_mass(1.0)
        params = ModelParams(gamma=2.0, c=0.1, T=1.0)
        grid = Grid(L=10.0, Nx=64, Nt=64, epsilon=0.05)
        res = hjb_residual(trivial_solution(params, grid), dist, params)
        assert np.max(np.abs(res)) == 0.0
