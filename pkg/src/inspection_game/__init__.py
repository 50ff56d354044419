"""Solvers for the zero-sum detector-placement inspection game.

A defender randomizes detectors over locations with overlapping
monitoring sets and location-specific detection probabilities while an
attacker targets several components; both play against the expected
number of undetected attacks.  The package computes exact equilibria by
column generation over a compact master LP and approximate equilibria by
column generation or multiplicative weights, each driven by greedy best
responses, with a linear-time entropy projection onto the attacker's
marginal polytope.
"""

from .best_response import (
    CurvatureReport,
    curvature,
    exact_best_response,
    forward_greedy,
    greedy_alpha_bound,
    reverse_greedy,
)
from .colgen import (
    Certificates,
    ColGenConfig,
    EquilibriumResult,
    reduced_cost,
    solve_colgen,
    solve_full_matrix,
)
from .errors import (
    DomainError,
    EnumerationCapError,
    GameError,
    GenerationError,
    InfeasibleMarginalError,
    NonconvergenceError,
    NumericalInconsistencyError,
    SolverFailureError,
    ValidationError,
)
from .game import (
    DetectorSet,
    InspectionInstance,
    MarginalAttackVector,
    MixedAttackStrategy,
    MixedDefenderStrategy,
    expected_undetection,
    expected_undetection_mixed,
    undetection_coefficients,
    undetection_pure,
    worst_case_attack_value,
)
from .io import (
    generate_geometric,
    parse_instance,
    parse_result,
    read_instance,
    serialize_instance,
    serialize_result,
    write_instance,
)
from .marginals import decompose, is_feasible_marginal, marginals_of
from .mwu import MWUConfig, MWUTrace, mwu_step, solve_mwu
from .projection import OpCounter, divergence, project_linear, project_sorted
from .simplex import DenseLP, LPSolution, build_rmp, solve_lp

__version__ = "0.1.0"

__all__ = [
    "CurvatureReport",
    "Certificates",
    "ColGenConfig",
    "DenseLP",
    "DetectorSet",
    "DomainError",
    "EnumerationCapError",
    "EquilibriumResult",
    "GameError",
    "GenerationError",
    "InfeasibleMarginalError",
    "InspectionInstance",
    "LPSolution",
    "MarginalAttackVector",
    "MixedAttackStrategy",
    "MixedDefenderStrategy",
    "MWUConfig",
    "MWUTrace",
    "NonconvergenceError",
    "NumericalInconsistencyError",
    "OpCounter",
    "SolverFailureError",
    "ValidationError",
    "build_rmp",
    "curvature",
    "decompose",
    "divergence",
    "exact_best_response",
    "expected_undetection",
    "expected_undetection_mixed",
    "forward_greedy",
    "generate_geometric",
    "greedy_alpha_bound",
    "is_feasible_marginal",
    "marginals_of",
    "mwu_step",
    "parse_instance",
    "parse_result",
    "project_linear",
    "project_sorted",
    "read_instance",
    "reduced_cost",
    "reverse_greedy",
    "serialize_instance",
    "serialize_result",
    "solve_colgen",
    "solve_full_matrix",
    "solve_lp",
    "solve_mwu",
    "undetection_coefficients",
    "undetection_pure",
    "worst_case_attack_value",
    "write_instance",
]
