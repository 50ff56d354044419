"""Projection onto the capped simplex under the unnormalized relative entropy.

The feasible set is {rho in [0,1]^m : sum(rho) <= r_A} and the divergence is

    D(rho || ref) = sum_e ( rho_e * ln(rho_e / ref_e) + ref_e - rho_e )

with the convention 0 * ln 0 = 0.  The minimizer is a truncated scaling
min(mu * ref_e, 1).  When the entrywise clamp min(ref, 1) already fits the
budget, mu = 1.  Otherwise mu is determined by the number k* of entries
pinned at 1, found either by sorting (`project_sorted`) or by a
selection-based binary search that runs in linear time (`project_linear`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .game import MarginalAttackVector, _as_rho

#: slack used to route the budget-boundary case to the clamp-only branch
_CASE1_SLACK = 1e-12


@dataclass
class OpCounter:
    """Counts array elements touched, for empirical complexity checks."""

    visits: int = 0

    def add(self, k: int) -> None:
        self.visits += int(k)


def _require_positive(ref) -> np.ndarray:
    vec = _as_rho(ref)
    if np.any(~(vec > 0.0)):
        raise DomainError("reference vector must be strictly positive")
    return vec


def divergence(rho, ref) -> float:
    """Unnormalized relative entropy D(rho || ref); both length-m vectors."""
    r = _as_rho(rho)
    t = _require_positive(ref)
    if r.shape != t.shape:
        raise DomainError("vectors must have the same length")
    if np.any(r < 0.0):
        raise DomainError("first argument must be nonnegative")
    pos = r > 0.0
    entropy = float(np.sum(r[pos] * np.log(r[pos] / t[pos])))
    return entropy + float(t.sum() - r.sum())


def _clamp_fits_budget(ref: np.ndarray, r_A: int) -> bool:
    return float(np.minimum(ref, 1.0).sum()) <= r_A + _CASE1_SLACK


def _finish(ref: np.ndarray, mu: float) -> MarginalAttackVector:
    return MarginalAttackVector(np.minimum(mu * ref, 1.0))


def project_sorted(ref, r_A: int) -> MarginalAttackVector:
    """Reference projection computed from the descending sort of `ref`.

    The number of entries pinned at 1 is the largest k <= r_A for which
    k + (1 / x_k) * (sum of entries after the k-th largest) stays within
    the budget, with the k = 0 term defined as 0.
    """
    vec = _require_positive(ref)
    if not isinstance(r_A, (int, np.integer)) or r_A < 1:
        raise DomainError(f"budget must be a positive integer, got {r_A!r}")
    if _clamp_fits_budget(vec, r_A):
        return _finish(vec, 1.0)

    desc = np.sort(vec)[::-1]
    m = vec.size
    # in the over-budget case the budget is strictly below m
    suffix = np.concatenate((np.cumsum(desc[::-1])[::-1], [0.0]))
    k_star = 0
    for k in range(1, min(r_A, m - 1) + 1):
        if k + suffix[k] / desc[k - 1] <= r_A:
            k_star = k
    mu = (r_A - k_star) / suffix[k_star]
    return _finish(vec, mu)


def _kth_smallest(a: np.ndarray, k: int, counter: OpCounter | None) -> float:
    """Order statistic by deterministic median-of-medians selection."""
    while True:
        n = a.size
        if counter is not None:
            counter.add(n)
        if n <= 10:
            return float(np.sort(a)[k])
        full = n - n % 5
        meds = np.sort(a[:full].reshape(-1, 5), axis=1)[:, 2]
        if n % 5:
            rest = np.sort(a[full:])
            meds = np.append(meds, rest[(rest.size - 1) // 2])
        pivot = _kth_smallest(meds, (meds.size - 1) // 2, counter)
        low = a[a < pivot]
        if k < low.size:
            a = low
            continue
        n_eq = int(np.count_nonzero(a == pivot))
        if k < low.size + n_eq:
            return float(pivot)
        k -= low.size + n_eq
        a = a[a > pivot]


def project_linear(ref, r_A: int, counter: OpCounter | None = None) -> MarginalAttackVector:
    """Projection computed without sorting, in worst-case linear time.

    Binary search over the candidate pin count.  The working set is split
    by the value of its ceil(|F|/2)-th largest entry into strictly-higher,
    equal, and strictly-lower classes; two accumulators carry the pinned
    count and the discarded tail weight of everything already resolved.
    The split value classes are defined by exact float comparison, which
    is safe because compared values are unmodified input entries, and the
    search never recurses into the equal class.

    Pass an `OpCounter` to record how many array elements are touched.
    """
    vec = _require_positive(ref)
    if not isinstance(r_A, (int, np.integer)) or r_A < 1:
        raise DomainError(f"budget must be a positive integer, got {r_A!r}")
    if counter is not None:
        counter.add(vec.size)
    if _clamp_fits_budget(vec, r_A):
        return _finish(vec, 1.0)

    work = vec
    pinned = 0  # resolved entries strictly above every value still in play
    tail = 0.0  # total weight of resolved entries below the current window
    while work.size > 0:
        if counter is not None:
            counter.add(work.size)
        split = _kth_smallest(work, work.size - ((work.size + 1) // 2), counter)
        higher = work[work > split]
        lower = work[work < split]
        n_eq = work.size - higher.size - lower.size
        low_weight = float(lower.sum())
        if pinned + higher.size + n_eq + (low_weight + tail) / split <= r_A:
            pinned += higher.size + n_eq
            work = lower
        else:
            tail += split * n_eq + low_weight
            work = higher
    mu = (r_A - pinned) / tail
    return _finish(vec, mu)
