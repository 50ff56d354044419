"""Mapping between mixed attack strategies and marginal attack vectors.

A vector rho is the marginal profile of some budget-feasible mixed attack
strategy exactly when 0 <= rho_e <= 1 for every component and the entries
sum to at most r_A.  `decompose` constructs such a strategy with support
size at most m + 1 by peeling weighted attack sets off the residual.
"""

from __future__ import annotations

import numpy as np

from .errors import InfeasibleMarginalError
from .game import TOL, MarginalAttackVector, MixedAttackStrategy, _as_rho

_ZERO = 1e-12


def is_feasible_marginal(rho, r_A: int) -> bool:
    """Box and budget membership test, within tolerance 1e-9."""
    vec = _as_rho(rho)
    if np.any(vec < -TOL) or np.any(vec > 1.0 + TOL):
        return False
    return float(vec.sum()) <= r_A + TOL


def marginals_of(sigma_A: MixedAttackStrategy) -> MarginalAttackVector:
    """Per-component probability of being targeted under a mixed strategy."""
    rho = np.zeros(sigma_A.num_components)
    for T, prob in sigma_A.support:
        for e in T:
            rho[e] += prob
    return MarginalAttackVector(np.clip(rho, 0.0, 1.0))


def decompose(rho, r_A: int) -> MixedAttackStrategy:
    """Express a marginal vector as a mixture of attack sets of size <= r_A.

    Iterative peeling: repeatedly take the largest residual entries (at
    most r_A of them), assign the largest coefficient that keeps the
    residual decomposable with the remaining probability mass, subtract,
    and continue.  Each step permanently zeroes a residual entry, pins an
    entry to the remaining mass, or exhausts the mass, so at most m + 1
    sets are produced.
    """
    vec = _as_rho(rho)
    m = vec.size
    if not is_feasible_marginal(vec, r_A):
        raise InfeasibleMarginalError(
            f"vector with sum {vec.sum()!r} is not a feasible marginal for r_A={r_A}"
        )
    r = np.clip(vec, 0.0, 1.0)
    total = float(r.sum())
    if total > r_A:  # can exceed by <= 1e-9 after clamping; rescale away
        r *= r_A / total

    pairs = []
    mass = 1.0  # probability mass still to distribute
    for _ in range(m + 1):
        positive = np.flatnonzero(r > _ZERO)
        if positive.size == 0:
            break
        order = positive[np.lexsort((positive, -r[positive]))]
        take = order[: min(r_A, order.size)]
        in_set = np.zeros(m, dtype=bool)
        in_set[take] = True

        lam = min(float(r[take].min()), mass)
        if take.size < m:
            # excluded entries may hold at most the leftover mass
            lam = min(lam, mass - float(r[~in_set].max()))
        if take.size < r_A:
            # keep the residual total within budget for the leftover mass
            lam = min(lam, (r_A * mass - float(r.sum())) / (r_A - take.size))
        if lam <= _ZERO:
            break  # nothing meaningful left to peel; residual check decides
        pairs.append((tuple(int(e) for e in take), lam))
        r[take] -= lam
        r[r <= _ZERO] = 0.0
        mass -= lam
        if mass <= _ZERO:
            mass = 0.0
            break

    if np.any(r > 10 * TOL):
        raise InfeasibleMarginalError("decomposition left a nonzero residual")
    if mass > _ZERO:
        pairs.append(((), mass))
    return MixedAttackStrategy.from_pairs(pairs, m)
