"""Shared fixtures: reference model cases and session-scoped solves."""

import pytest

from reinsdiv import ClaimDistribution, Grid, ModelParams, solve_penalized

#: the three benchmark cases used across the suite
CASES = {
    "point": (ClaimDistribution.point_mass(1.0), ModelParams(gamma=0.25, c=0.1, T=1.0)),
    "exp": (ClaimDistribution.exponential(1.0), ModelParams(gamma=0.3, c=0.1, T=1.0)),
    "disc": (
        ClaimDistribution.discrete([(0.5, 0.3), (2.0, 0.7)]),
        ModelParams(gamma=0.2, c=0.1, T=1.0),
    ),
}


def solve_case(name, Nx=256, Nt=128, epsilon=0.02, **kwargs):
    dist, params = CASES[name]
    grid = Grid.auto(dist, params, Nx=Nx, Nt=Nt, epsilon=epsilon)
    return dist, params, solve_penalized(dist, params, grid, **kwargs)


@pytest.fixture(scope="session")
def small_fields():
    """Desk-scale solves of all three cases, shared across test modules."""
    return {name: solve_case(name) for name in CASES}


@pytest.fixture(scope="session")
def point_field_fine():
    """Fine solve of the point-mass case, for oracle and Monte-Carlo checks."""
    dist, params = CASES["point"]
    grid = Grid.auto(dist, params, Nx=2048, Nt=512, epsilon=0.005)
    return dist, params, solve_penalized(dist, params, grid)
