"""Finite-horizon optimal reinsurance and dividend-payout toolkit.

Solves the penalized gradient form of the payout/reinsurance variational
inequality on a truncated grid, extracts the payout and reinsurance free
boundaries, cross-checks the value against a coarse controlled-Markov-chain
oracle, and verifies the optimal feedback policy by Monte-Carlo simulation.
"""

__version__ = "0.1.0"

from .boundaries import (
    DiscreteBoundaries,
    FreeBoundaries,
    OutOfRegion,
    Region,
    ceded_loss,
    classify,
    compute_free_boundaries,
    discrete_claim_boundaries,
    extract_dividend_boundary,
    extract_reinsurance_boundary,
    isotonic_increasing,
)
from .claims import (
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
    retained_moments,
    survival,
)
from .config import ConfigError, RunConfig, load_config
from .mca import LatticeValue, mca_oracle
from .pde import (
    Grid,
    InvariantBreach,
    NonConvergence,
    SolutionField,
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
from .simulate import (
    PolicyRun,
    SimConfig,
    feedback_coefficients,
    simulate,
    simulate_suboptimal,
)

__all__ = [
    "ClaimDistribution",
    "ConfigError",
    "DiscreteBoundaries",
    "FreeBoundaries",
    "Grid",
    "InvariantBreach",
    "LatticeValue",
    "ModelParams",
    "NoRoot",
    "NonConvergence",
    "OutOfRegion",
    "PolicyRun",
    "Region",
    "RunConfig",
    "SimConfig",
    "SolutionField",
    "TOL_INV",
    "boundary_smoother",
    "ceded_loss",
    "classify",
    "compute_free_boundaries",
    "discrete_claim_boundaries",
    "dividend_bound",
    "drift_f",
    "extract_dividend_boundary",
    "extract_reinsurance_boundary",
    "feedback_coefficients",
    "hjb_residual",
    "integrate_value",
    "invariant_defects",
    "isotonic_increasing",
    "lambda_root",
    "load_config",
    "mca_oracle",
    "moments",
    "optimal_retention",
    "penalty_beta",
    "penalty_beta_prime",
    "retained_A",
    "retained_B",
    "retained_moments",
    "simulate",
    "simulate_suboptimal",
    "solve_penalized",
    "survival",
    "trivial_solution",
]
