"""Column generation over the compact master LP.

Each iteration solves the restricted master for the current defender
columns, reads the attacker marginals and the master value off the duals,
and prices a new column with a best-response oracle (exhaustive or
greedy).  The loop stops once the priced column's reduced cost is within
epsilon of nonnegative; with an alpha-approximate oracle the returned
profile is an alpha/epsilon approximate equilibrium, and with the exact
oracle and epsilon zero it is exact.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .best_response import (
    DEFAULT_ENUMERATION_CAP,
    exact_best_response,
    forward_greedy,
    greedy_alpha_bound,
    reverse_greedy,
)
from .errors import (
    EnumerationCapError,
    NonconvergenceError,
    NumericalInconsistencyError,
    SolverFailureError,
    ValidationError,
)
from .game import (
    DetectorSet,
    InspectionInstance,
    MarginalAttackVector,
    MixedDefenderStrategy,
    TOL,
    _as_rho,
    worst_case_attack_value,
)
from .marginals import is_feasible_marginal
from .simplex import build_rmp, rmp_crash_basis, solve_lp

PRICING_MODES = ("exact", "forward_greedy", "reverse_greedy")

#: extra slack added to the termination test, matching the LP optimality
#: tolerance so that re-priced master columns never look improving
RC_SLACK = 1e-9


@dataclass(frozen=True)
class ColGenConfig:
    pricing_mode: str = "exact"
    epsilon: float = 0.0
    max_iterations: int = 10_000
    initial_columns: tuple | None = None
    exact_br_cap: int = DEFAULT_ENUMERATION_CAP

    def __post_init__(self):
        if self.pricing_mode not in PRICING_MODES:
            raise ValidationError(
                f"pricing_mode must be one of {PRICING_MODES}, got {self.pricing_mode!r}"
            )
        if self.epsilon < 0:
            raise ValidationError("epsilon must be nonnegative")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be positive")


@dataclass(frozen=True)
class Certificates:
    """Equilibrium-quality evidence attached to a solve.

    `attacker_best_response` is the exact worst case over all marginal
    attacks against the returned placement distribution.
    `defender_best_response` is the exact pure best-response value against
    the returned attack marginals, or None when enumeration was not
    affordable.  `schedule_satisfied` is False when an iteration budget
    below the guaranteed schedule was forced on the solver.
    """

    attacker_best_response: float
    defender_best_response: float | None
    alpha: float
    epsilon: float
    schedule_satisfied: bool = True


@dataclass(frozen=True)
class EquilibriumResult:
    instance: InspectionInstance
    sigma_D: MixedDefenderStrategy
    rho_A: MarginalAttackVector
    value: float
    alpha_used: float
    epsilon_used: float
    iterations: int
    columns_generated: int
    certificates: Certificates
    diagnostics: dict = field(default_factory=dict)

    def validate(self) -> None:
        upper = min(self.instance.r_A, self.instance.m)
        if not -TOL <= self.value <= upper + 1e-6:
            raise NumericalInconsistencyError(
                f"value {self.value!r} outside [0, {upper}]"
            )
        if not is_feasible_marginal(self.rho_A, self.instance.r_A):
            raise NumericalInconsistencyError("attack marginals left the polytope")
        self.sigma_D.validate_for(self.instance)


def reduced_cost(instance: InspectionInstance, S, rho, nu: float) -> float:
    """Master reduced cost of a defender column: its expected undetected
    attacks against the dual marginals, minus the distribution-row dual."""
    vec = _as_rho(rho, instance.m)
    return float(instance.undetection_row(S) @ vec) - float(nu)


def _price(instance, mode, rho, cap):
    if mode == "exact":
        return exact_best_response(instance, rho, cap=cap)
    if mode == "forward_greedy":
        s = forward_greedy(instance, rho)
    else:
        s = reverse_greedy(instance, rho)
    return s, float(instance.undetection_row(s) @ rho)


def _alpha_for_mode(instance, mode) -> float:
    return 1.0 if mode == "exact" else greedy_alpha_bound(instance)


def build_certificates(
    instance: InspectionInstance,
    sigma_D: MixedDefenderStrategy,
    rho_A: MarginalAttackVector,
    alpha: float,
    epsilon: float,
    exact_br_cap: int = DEFAULT_ENUMERATION_CAP,
    schedule_satisfied: bool = True,
) -> Certificates:
    attack_value, _ = worst_case_attack_value(instance, sigma_D)
    defend_value = None
    try:
        _, defend_value = exact_best_response(instance, rho_A, cap=exact_br_cap)
    except EnumerationCapError:
        pass
    return Certificates(
        attacker_best_response=attack_value,
        defender_best_response=defend_value,
        alpha=alpha,
        epsilon=epsilon,
        schedule_satisfied=schedule_satisfied,
    )


def _solve_master(instance, columns):
    lp = build_rmp(instance, columns)
    sol = solve_lp(lp, initial_basis=rmp_crash_basis(len(columns), instance.m))
    if sol.status != "optimal":
        raise SolverFailureError(f"restricted master came back {sol.status}")
    m, k = instance.m, len(columns)
    sigma_vals = sol.x[:k]
    rho = np.clip(sol.duals[:m], 0.0, 1.0)
    nu = float(sol.duals[m])
    if float(rho.sum()) > instance.r_A + 1e-6:
        raise NumericalInconsistencyError("master duals violate the attack budget")
    return sol, sigma_vals, rho, nu


def _strategy_from_weights(columns, weights) -> MixedDefenderStrategy:
    pairs = [(s, w) for s, w in zip(columns, weights) if w > 1e-12]
    total = sum(w for _, w in pairs)
    return MixedDefenderStrategy.from_pairs([(s, w / total) for s, w in pairs])


def default_initial_columns(instance: InspectionInstance) -> list[DetectorSet]:
    """Empty placement plus the greedy response to the uniform marginals."""
    uniform = np.full(instance.m, instance.r_A / instance.m)
    cols = [DetectorSet.of(()), forward_greedy(instance, uniform)]
    seen: dict[tuple, DetectorSet] = {}
    for s in cols:
        seen.setdefault(s.key(), s)
    return list(seen.values())


def solve_colgen(instance: InspectionInstance, config: ColGenConfig) -> EquilibriumResult:
    """Run column generation to an epsilon-certified strategy profile.

    Raises NonconvergenceError (carrying the best incumbent) if the
    iteration budget runs out, and NumericalInconsistencyError if pricing
    proposes an improving column the master already owns, which signals a
    dual or tolerance problem rather than a modeling one.
    """
    started = time.perf_counter()
    columns = list(config.initial_columns or default_initial_columns(instance))
    if not columns:
        raise ValidationError("initial column set must be nonempty")
    known = {s.key() for s in columns}
    alpha = _alpha_for_mode(instance, config.pricing_mode)

    values: list[float] = []
    trace: list[tuple[int, float, float]] = []
    final = None
    for iteration in range(1, config.max_iterations + 1):
        sol, sigma_vals, rho, nu = _solve_master(instance, columns)
        values.append(float(sol.objective))
        priced, priced_value = _price(instance, config.pricing_mode, rho, config.exact_br_cap)
        rc = priced_value - nu
        trace.append((iteration, float(sol.objective), rc))
        if rc >= -(config.epsilon + RC_SLACK):
            final = (sol, sigma_vals, rho, iteration)
            break
        if priced.key() in known:
            raise NumericalInconsistencyError(
                f"column {priced.key()} re-priced with reduced cost {rc:.3e}"
            )
        columns.append(priced)
        known.add(priced.key())

    def _result(sol, sigma_vals, rho, iteration) -> EquilibriumResult:
        sigma = _strategy_from_weights(columns, sigma_vals)
        rho_vec = MarginalAttackVector(rho)
        certs = build_certificates(
            instance, sigma, rho_vec, alpha, config.epsilon, config.exact_br_cap
        )
        wall_ms = (time.perf_counter() - started) * 1000.0
        result = EquilibriumResult(
            instance=instance,
            sigma_D=sigma,
            rho_A=rho_vec,
            value=float(sol.objective),
            alpha_used=alpha,
            epsilon_used=config.epsilon,
            iterations=iteration,
            columns_generated=len(columns),
            certificates=certs,
            diagnostics={
                "iterations": iteration,
                "columns": len(columns),
                "wall_ms": wall_ms,
                "rmp_values": values,
                "trace": trace,
            },
        )
        result.validate()
        return result

    if final is None:
        sol, sigma_vals, rho, nu = _solve_master(instance, columns)
        incumbent = _result(sol, sigma_vals, rho, config.max_iterations)
        raise NonconvergenceError(
            f"column generation did not converge in {config.max_iterations} iterations",
            incumbent=incumbent,
        )
    return _result(*final)


def all_columns(instance: InspectionInstance, cap: int = DEFAULT_ENUMERATION_CAP):
    """Every defender placement of size up to the budget, in lexicographic
    order by size then indices."""
    total = sum(math.comb(instance.n, k) for k in range(instance.r_D + 1))
    if total > cap:
        raise EnumerationCapError(total, cap)
    cols = []
    for k in range(instance.r_D + 1):
        for combo in itertools.combinations(range(instance.n), k):
            cols.append(DetectorSet.of(combo))
    return cols


def solve_full_matrix(
    instance: InspectionInstance, cap: int = DEFAULT_ENUMERATION_CAP
) -> EquilibriumResult:
    """Exact equilibrium from the master LP with every column present.

    Exponential in the defender budget; intended as the ground-truth
    oracle for small instances.
    """
    started = time.perf_counter()
    columns = all_columns(instance, cap=cap)
    sol, sigma_vals, rho, _ = _solve_master(instance, columns)
    sigma = _strategy_from_weights(columns, sigma_vals)
    rho_vec = MarginalAttackVector(rho)
    certs = build_certificates(instance, sigma, rho_vec, 1.0, 0.0, cap)
    result = EquilibriumResult(
        instance=instance,
        sigma_D=sigma,
        rho_A=rho_vec,
        value=float(sol.objective),
        alpha_used=1.0,
        epsilon_used=0.0,
        iterations=1,
        columns_generated=len(columns),
        certificates=certs,
        diagnostics={
            "iterations": 1,
            "columns": len(columns),
            "wall_ms": (time.perf_counter() - started) * 1000.0,
        },
    )
    result.validate()
    return result
