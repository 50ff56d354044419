"""Multiplicative weights update over the attacker's marginal polytope.

Starting from uniform marginals, each round lets the defender answer with
an (approximate) best response, multiplies every component's weight by
exp(eta * undetection probability), and projects back onto the capped
simplex under the unnormalized relative entropy.  The empirical placement
frequencies and the averaged marginal iterates form the returned profile.

With tau at least 4 r_A^2 max(ln(m / r_A), 1) / eps^2 rounds and
eta = sqrt(max(ln(m / r_A), 1) / tau), the additive equilibrium error is
at most eps (times the oracle's multiplicative factor).
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .best_response import (
    DEFAULT_ENUMERATION_CAP,
    candidate_matrix,
    exact_best_response,
    forward_greedy,
    greedy_alpha_bound,
    reverse_greedy,
    _forward_greedy_state,
)
from .colgen import Certificates, EquilibriumResult, build_certificates
from .errors import DomainError, ValidationError
from .game import (
    DetectorSet,
    InspectionInstance,
    MarginalAttackVector,
    MixedDefenderStrategy,
    _as_rho,
)
from .marginals import is_feasible_marginal
from .projection import project_linear

BEST_RESPONSE_MODES = ("forward_greedy", "reverse_greedy", "exact")


@dataclass(frozen=True)
class MWUConfig:
    """Either give `epsilon` (the additive error target, which fixes the
    iteration count and step size) or an explicit `tau`; `eta` may
    override the schedule.  Runs whose parameters cannot certify the
    requested error are marked, not rejected."""

    epsilon: float | None = None
    tau: int | None = None
    eta: float | None = None
    best_response_mode: str = "forward_greedy"
    exact_br_cap: int = DEFAULT_ENUMERATION_CAP
    record_trace: bool = False
    trace_limit: int | None = None

    def __post_init__(self):
        if self.best_response_mode not in BEST_RESPONSE_MODES:
            raise ValidationError(
                f"best_response_mode must be one of {BEST_RESPONSE_MODES}"
            )
        if self.epsilon is None and self.tau is None:
            raise ValidationError("config needs epsilon or an explicit tau")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        if self.tau is not None and self.tau < 1:
            raise ValidationError("tau must be a positive integer")
        if self.eta is not None and not 0 < self.eta <= 1:
            raise ValidationError("eta must lie in (0, 1]")


@dataclass
class MWUTrace:
    """Per-iteration log: placement key, payoff against the current
    marginals, and the post-projection mass as projection diagnostic."""

    entries: deque = field(default_factory=deque)

    def append(self, iteration, placement_key, value, projected_mass):
        self.entries.append((iteration, placement_key, value, projected_mass))

    def __len__(self):
        return len(self.entries)


def log_ratio_floor(instance: InspectionInstance) -> float:
    """max(ln(m / r_A), 1), the entropy radius of the marginal polytope."""
    return max(math.log(instance.m / instance.r_A), 1.0)


def schedule(instance: InspectionInstance, config: MWUConfig) -> tuple[int, float, float]:
    """Resolve (tau, eta, implied additive error) for an instance.

    The implied error is eta * r_A + r_A * L / (eta * tau), the value the
    regret analysis certifies for the actual parameters; it equals the
    requested epsilon when the schedule is honored.
    """
    big_l = log_ratio_floor(instance)
    r_a = instance.r_A
    if config.tau is not None:
        tau = config.tau
    else:
        tau = math.ceil(4.0 * r_a * r_a * big_l / (config.epsilon**2))
    eta = config.eta if config.eta is not None else math.sqrt(big_l / tau)
    if not eta <= 1.0 + 1e-12:
        raise ValidationError(
            f"step size {eta:.4g} exceeds 1; increase tau or lower epsilon"
        )
    implied = eta * r_a + r_a * big_l / (eta * tau)
    return tau, eta, implied


def _respond(instance, mode, rho, cap, cached):
    """One best response; returns (sorted index tuple, u(S, .) row)."""
    if mode == "exact":
        combos, rows = cached
        vals = rows @ rho
        i = int(np.argmin(vals))
        return combos[i], rows[i]
    if mode == "forward_greedy":
        return _forward_greedy_state(instance, rho)
    chosen = reverse_greedy(instance, rho)
    return chosen.key(), instance.undetection_row(chosen)


def mwu_step(
    instance: InspectionInstance,
    rho_t,
    eta: float,
    best_response_mode: str = "forward_greedy",
    exact_br_cap: int = DEFAULT_ENUMERATION_CAP,
) -> tuple[DetectorSet, MarginalAttackVector]:
    """One update round from strictly positive feasible marginals."""
    vec = _as_rho(rho_t, instance.m)
    if np.any(vec <= 0.0):
        raise DomainError("marginals must be strictly positive for the update")
    if not is_feasible_marginal(vec, instance.r_A):
        raise DomainError("marginals must lie in the attack polytope")
    if best_response_mode not in BEST_RESPONSE_MODES:
        raise ValidationError(f"unknown best response mode {best_response_mode!r}")
    if best_response_mode == "exact":
        placement, _ = exact_best_response(instance, vec, cap=exact_br_cap)
        row = instance.undetection_row(placement)
    elif best_response_mode == "forward_greedy":
        placement = forward_greedy(instance, vec)
        row = instance.undetection_row(placement)
    else:
        placement = reverse_greedy(instance, vec)
        row = instance.undetection_row(placement)
    updated = vec * np.exp(eta * row)
    return placement, project_linear(updated, instance.r_A)


def solve_mwu(instance: InspectionInstance, config: MWUConfig) -> EquilibriumResult:
    """Full run returning the averaged profile with quality certificates."""
    started = time.perf_counter()
    tau, eta, implied = schedule(instance, config)
    mode = config.best_response_mode
    alpha = 1.0 if mode == "exact" else greedy_alpha_bound(instance)
    cached = candidate_matrix(instance, cap=config.exact_br_cap) if mode == "exact" else None

    m, r_a = instance.m, instance.r_A
    rho = np.full(m, r_a / m)
    counts: dict[tuple, int] = {}
    rho_sum = np.zeros(m)
    coeff_sum = np.zeros(m)
    played_total = 0.0
    trace = None
    if config.record_trace:
        trace = MWUTrace(deque(maxlen=config.trace_limit))

    for t in range(1, tau + 1):
        key, row = _respond(instance, mode, rho, config.exact_br_cap, cached)
        counts[key] = counts.get(key, 0) + 1
        rho_sum += rho
        coeff_sum += row
        played = float(row @ rho)
        played_total += played
        projected = project_linear(rho * np.exp(eta * row), r_a)
        rho = projected.rho
        if trace is not None:
            trace.append(t, key, played, float(rho.sum()))

    sigma = MixedDefenderStrategy.from_pairs(
        [(DetectorSet.of(k), cnt / tau) for k, cnt in sorted(counts.items())]
    )
    rho_hat = MarginalAttackVector(np.clip(rho_sum / tau, 0.0, 1.0))
    value = float((coeff_sum / tau) @ rho_hat.rho)

    # regret certificate: best fixed marginal response in hindsight vs play
    top = np.sort(coeff_sum)[::-1][:r_a]
    regret = float(top.sum()) - played_total
    regret_bound = r_a * log_ratio_floor(instance) / eta + eta * tau * r_a

    epsilon_used = config.epsilon if config.epsilon is not None else implied
    satisfied = config.epsilon is None or implied <= config.epsilon + 1e-9
    certs = build_certificates(
        instance,
        sigma,
        rho_hat,
        alpha,
        epsilon_used,
        config.exact_br_cap,
        schedule_satisfied=satisfied,
    )
    result = EquilibriumResult(
        instance=instance,
        sigma_D=sigma,
        rho_A=rho_hat,
        value=value,
        alpha_used=alpha,
        epsilon_used=epsilon_used,
        iterations=tau,
        columns_generated=len(counts),
        certificates=certs,
        diagnostics={
            "iterations": tau,
            "columns": len(counts),
            "wall_ms": (time.perf_counter() - started) * 1000.0,
            "eta": eta,
            "tau": tau,
            "epsilon_implied": implied,
            "regret": regret,
            "regret_bound": regret_bound,
            "trace": trace,
        },
    )
    result.validate()
    return result
