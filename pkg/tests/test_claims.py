"""Distribution calculus: closed forms against quadrature and brute force."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from reinsdiv import (
    ClaimDistribution,
    ModelParams,
    NoRoot,
    dividend_bound,
    drift_f,
    lambda_root,
    moments,
    optimal_retention,
    retained_A,
    retained_B,
    survival,
)

DISTS = {
    "point_mass": ClaimDistribution.point_mass(1.0),
    "discrete": ClaimDistribution.discrete([(0.5, 0.3), (2.0, 0.7)]),
    "exponential": ClaimDistribution.exponential(1.3),
    "uniform": ClaimDistribution.uniform(2.5),
}


class TestConstruction:
    def test_atom_validation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            ClaimDistribution.discrete([(0.5, 0.3), (2.0, 0.6)])
        with pytest.raises(ValueError, match="ascending"):
            ClaimDistribution.discrete([(2.0, 0.5), (0.5, 0.5)])
        with pytest.raises(ValueError, match="> 0"):
            ClaimDistribution.discrete([(-1.0, 0.5), (2.0, 0.5)])
        with pytest.raises(ValueError, match="exactly one atom"):
            ClaimDistribution("point_mass", atoms=((1.0, 0.5), (2.0, 0.5)))
        with pytest.raises(ValueError, match="scale > 0"):
            ClaimDistribution.exponential(0.0)
        with pytest.raises(ValueError, match="kind"):
            ClaimDistribution("lognormal", scale=1.0)

    def test_params_validation(self):
        with pytest.raises(ValueError, match="gamma"):
            ModelParams(gamma=0.0, c=0.1, T=1.0)
        with pytest.raises(ValueError, match="c must"):
            ModelParams(gamma=0.1, c=-1.0, T=1.0)
        with pytest.raises(ValueError, match="T must"):
            ModelParams(gamma=0.1, c=0.1, T=0.0)

    def test_ess_sup(self):
        assert DISTS["point_mass"].ess_sup == 1.0
        assert DISTS["discrete"].ess_sup == 2.0
        assert DISTS["uniform"].ess_sup == 2.5
        assert math.isinf(DISTS["exponential"].ess_sup)


class TestMoments:
    def test_point_mass(self):
        assert moments(ClaimDistribution.point_mass(1.0)) == (1.0, 1.0)

    def test_exponential(self):
        # int z e^{-z/m}/m dz = m, int z^2 e^{-z/m}/m dz = 2 m^2
        assert moments(ClaimDistribution.exponential(2.0)) == (2.0, 8.0)

    def test_uniform(self):
        mu1, mu2 = moments(ClaimDistribution.uniform(3.0))
        assert mu1 == 1.5
        assert mu2 == pytest.approx(3.0, rel=1e-15)

    @pytest.mark.parametrize("name", DISTS)
    def test_jensen(self, name):
        mu1, mu2 = moments(DISTS[name])
        assert mu1 > 0 and mu2 > 0
        assert mu2 >= mu1**2


class TestRetainedMoments:
    @pytest.mark.parametrize("name", DISTS)
    def test_saturated_branch(self, name):
        mu1, mu2 = moments(DISTS[name])
        assert retained_A(DISTS[name], -1.0) == mu2 / 2.0
        assert retained_B(DISTS[name], 0.0) == mu1

    def test_point_mass_values(self):
        pm = DISTS["point_mass"]
        assert retained_A(pm, 2.0) == pytest.approx(0.125, abs=1e-15)  # int_0^0.5 z dz
        assert retained_B(pm, 2.0) == pytest.approx(0.5, abs=1e-15)
        # cap covers the whole support: saturates exactly
        assert retained_A(pm, 0.5) == moments(pm)[1] / 2.0

    def test_exponential_value(self):
        m = 1.3
        d = ClaimDistribution.exponential(m)
        assert retained_B(d, 1.0 / m) == pytest.approx(m * (1.0 - math.exp(-1.0)), rel=1e-14)

    @pytest.mark.parametrize("name", ["point_mass", "discrete", "uniform"])
    def test_exact_saturation_beyond_support(self, name):
        dist = DISTS[name]
        y = 1.0 / dist.ess_sup  # cap exactly at the top of the support
        y_values = [y, y / 2, y / 10]
        _, mu2 = moments(dist)
        for yv in y_values:
            assert retained_A(dist, yv) == mu2 / 2.0

    @pytest.mark.parametrize("name", DISTS)
    def test_monotone_on_log_grid(self, name):
        y = np.geomspace(1e-6, 1e6, 1000)
        A = retained_A(DISTS[name], y)
        B = retained_B(DISTS[name], y)
        assert np.all(np.diff(A) <= 1e-14)
        assert np.all(np.diff(B) <= 1e-14)

    @pytest.mark.parametrize("name", DISTS)
    def test_paper_bounds(self, name):
        y = np.geomspace(1e-3, 1e3, 200)
        _, mu2 = moments(DISTS[name])
        mu1 = moments(DISTS[name])[0]
        A = retained_A(DISTS[name], y)
        B = retained_B(DISTS[name], y)
        assert np.all(A > 0)
        assert np.all(A <= 0.5 * np.minimum(y**-2.0, mu2) + 1e-15)
        assert np.all(B > 0)
        assert np.all(B <= np.minimum(1.0 / y, mu1) + 1e-15)

    def test_quadrature_oracle(self):
        """Closed forms match adaptive quadrature of the defining integrals."""
        rng = np.random.default_rng(20240817)
        names = list(DISTS)
        for _ in range(100):
            dist = DISTS[names[rng.integers(len(names))]]
            y = float(np.exp(rng.uniform(np.log(1e-2), np.log(1e3))))
            w = 1.0 / y
            pts = [a[0] for a in dist.atoms if a[0] < w] or None
            ref_A = quad(lambda z: z * survival(dist, z), 0.0, w, points=pts,
                         limit=200, epsabs=1e-14, epsrel=1e-13)[0]
            ref_B = quad(lambda z: survival(dist, z), 0.0, w, points=pts,
                         limit=200, epsabs=1e-14, epsrel=1e-13)[0]
            assert retained_A(dist, y) == pytest.approx(ref_A, rel=1e-10, abs=1e-14)
            assert retained_B(dist, y) == pytest.approx(ref_B, rel=1e-10, abs=1e-14)


class TestDrift:
    def test_limits(self):
        params = ModelParams(gamma=0.25, c=0.1, T=1.0)
        for dist in DISTS.values():
            mu1, _ = moments(dist)
            assert drift_f(dist, params, 1e-12) == pytest.approx(mu1 - params.gamma, abs=1e-9)
            assert drift_f(dist, params, 1e10) == pytest.approx(-params.gamma, abs=1e-9)

    def test_point_mass_zero(self):
        params = ModelParams(gamma=0.25, c=0.1, T=1.0)
        # -2 * 0.125 + 0.5 - 0.25 = 0
        assert drift_f(DISTS["point_mass"], params, 2.0) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("name", DISTS)
    def test_strictly_decreasing(self, name):
        params = ModelParams(gamma=0.25, c=0.1, T=1.0)
        y = np.geomspace(1e-4, 1e4, 400)
        f = drift_f(DISTS[name], params, y)
        assert np.all(np.diff(f) < 0)


class TestLambdaRoot:
    def test_point_mass_closed_forms(self):
        pm = ClaimDistribution.point_mass(1.0)
        # f(y) = 1/(2y) - gamma on y >= 1, so lambda = 1/(2 gamma) for gamma <= 1/2
        assert lambda_root(pm, ModelParams(gamma=0.25, c=0.1, T=1.0)) == pytest.approx(2.0, abs=1e-10)
        # f(y) = -y/2 + 1 - gamma on y < 1, so lambda = 2(1 - gamma) for gamma > 1/2
        assert lambda_root(pm, ModelParams(gamma=0.75, c=0.1, T=1.0)) == pytest.approx(0.5, abs=1e-10)

    @pytest.mark.parametrize("name", DISTS)
    def test_root_certificate(self, name):
        dist = DISTS[name]
        mu1, _ = moments(dist)
        params = ModelParams(gamma=0.4 * mu1, c=0.1, T=1.0)
        lam = lambda_root(dist, params)
        assert abs(drift_f(dist, params, lam)) <= 1e-12 * max(1.0, params.gamma)
        assert drift_f(dist, params, lam * (1 - 1e-6)) > 0
        assert drift_f(dist, params, lam * (1 + 1e-6)) < 0

    def test_no_root_at_and_above_mu1(self):
        pm = ClaimDistribution.point_mass(1.0)
        with pytest.raises(NoRoot):
            lambda_root(pm, ModelParams(gamma=1.0, c=0.1, T=1.0))
        with pytest.raises(NoRoot):
            lambda_root(pm, ModelParams(gamma=1.5, c=0.1, T=1.0))

    def test_near_trivial_root(self):
        pm = ClaimDistribution.point_mass(1.0)
        lam = lambda_root(pm, ModelParams(gamma=1.0 - 1e-9, c=0.1, T=1.0))
        assert lam == pytest.approx(2e-9, rel=1e-3)


class TestOptimalRetention:
    def test_examples(self):
        assert optimal_retention(3.0, 0.5) == 2.0
        assert optimal_retention(3.0, -1.0) == 3.0
        assert optimal_retention(0.1, 2.0) == 0.1

    def test_brute_force_oracle(self):
        """h* beats a 10^4-point grid search of h -> -h^2 y / 2 + h on [0, z]."""
        rng = np.random.default_rng(7)
        grid_n = 10_000
        for _ in range(1000):
            z = float(rng.uniform(0.01, 5.0))
            y = float(rng.uniform(-2.0, 8.0))
            h_star = optimal_retention(z, y)
            assert 0.0 <= h_star <= z
            h_grid = np.linspace(0.0, z, grid_n)
            obj = -0.5 * h_grid**2 * y + h_grid
            h_best = h_grid[np.argmax(obj)]
            assert abs(h_star - h_best) <= z / (grid_n - 1) + 1e-12


class TestDividendBound:
    def test_formula(self):
        pm = ClaimDistribution.point_mass(1.0)
        params = ModelParams(gamma=0.25, c=0.1, T=1.0)
        expected = math.sqrt((1.0 + 0.025) * (0.1 + 0.0625) / (0.25 * 0.001))
        assert dividend_bound(pm, params) == pytest.approx(expected, rel=1e-15)

    def test_trivial_regime_is_zero(self):
        pm = ClaimDistribution.point_mass(1.0)
        assert dividend_bound(pm, ModelParams(gamma=1.0, c=0.1, T=1.0)) == 0.0
