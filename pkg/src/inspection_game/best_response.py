"""Defender best-response oracles against a marginal attack vector.

The undetection payoff, seen as a set function of the placement, is
nonincreasing and supermodular, so minimizing it under the cardinality
budget admits greedy approximations whose quality is governed by the
curvature of the function.  This module provides the exhaustive oracle,
the add-one-at-a-time and remove-one-at-a-time greedy variants, and the
curvature computation with the associated approximation factors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationCapError
from .game import DetectorSet, InspectionInstance, _as_rho

#: default limit on the number of candidate sets the exact oracle enumerates
DEFAULT_ENUMERATION_CAP = 2_000_000


_CHUNK = 16_384


def _combo_chunks(n: int, r: int):
    """Lexicographic size-r index tuples, yielded as (start, index array)."""
    it = itertools.combinations(range(n), r)
    start = 0
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield start, np.array(block, dtype=np.intp)
        start += len(block)


def _chunk_rows(instance: InspectionInstance, idx: np.ndarray) -> np.ndarray:
    """Undetection rows u(S, .) for a chunk of same-size placements."""
    rows = np.ones((idx.shape[0], instance.m))
    for col in range(idx.shape[1]):
        rows *= instance.undet_factors[idx[:, col]]
    return rows


def exact_best_response(
    instance: InspectionInstance, rho, cap: int = DEFAULT_ENUMERATION_CAP
) -> tuple[DetectorSet, float]:
    """Exhaustive minimizer of the expected undetected attacks.

    Only placements of full size r_D are enumerated; the payoff never
    increases when a detector is added, so some full-size placement is
    always optimal.  Ties break lexicographically on sorted indices.
    """
    vec = _as_rho(rho, instance.m)
    n, r = instance.n, instance.r_D
    count = math.comb(n, r)
    if count > cap:
        raise EnumerationCapError(count, cap)
    best_set: np.ndarray | None = None
    best_val = math.inf
    for _, idx in _combo_chunks(n, r):
        vals = _chunk_rows(instance, idx) @ vec
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_set = idx[i]
    assert best_set is not None
    return DetectorSet.of(best_set), best_val


def candidate_matrix(
    instance: InspectionInstance, cap: int = DEFAULT_ENUMERATION_CAP
) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """All size-r_D placements with their undetection rows u(S, e).

    Row i of the matrix corresponds to the i-th placement in
    lexicographic order; `matrix @ rho` then prices every candidate at
    once, which is how the MWU loop amortizes exact best responses.
    """
    n, r = instance.n, instance.r_D
    count = math.comb(n, r)
    if count > cap:
        raise EnumerationCapError(count, cap)
    combos = list(itertools.combinations(range(n), r))
    rows = np.empty((count, instance.m))
    for start, idx in _combo_chunks(n, r):
        rows[start : start + idx.shape[0]] = _chunk_rows(instance, idx)
    return combos, rows


def _forward_greedy_state(
    instance: InspectionInstance, vec: np.ndarray
) -> tuple[tuple[int, ...], np.ndarray]:
    """Greedy additions; returns the placement and its undetection row."""
    n = instance.n
    p = instance.detection_probs
    incidence = instance.incidence
    undet = np.ones(instance.m)
    chosen: list[int] = []
    available = np.ones(n, dtype=bool)
    for _ in range(instance.r_D):
        gains = p * (incidence @ (vec * undet))
        gains[~available] = -np.inf
        v = int(np.argmax(gains))
        chosen.append(v)
        available[v] = False
        undet = undet * instance.undet_factors[v]
    return tuple(sorted(chosen)), undet


def forward_greedy(instance: InspectionInstance, rho) -> DetectorSet:
    """Start empty; r_D times add the location with the largest marginal
    decrease in expected undetected attacks.  Ties go to the lowest index.
    """
    vec = _as_rho(rho, instance.m)
    chosen, _ = _forward_greedy_state(instance, vec)
    return DetectorSet.of(chosen)


def reverse_greedy(instance: InspectionInstance, rho) -> DetectorSet:
    """Start from all locations; repeatedly drop the member whose removal
    increases the expected undetected attacks the least, until r_D remain.
    Ties go to the lowest index.

    Per-component undetection products are maintained incrementally, with
    perfect detectors (p_v = 1) tracked through a zero-factor count so no
    division by zero occurs.
    """
    vec = _as_rho(rho, instance.m)
    n = instance.n
    p = instance.detection_probs
    incidence = instance.incidence
    perfect = p >= 1.0
    ratio = np.divide(p, 1.0 - p, out=np.zeros_like(p), where=~perfect)

    members = np.ones(n, dtype=bool)
    # product of the nonzero undetection factors over current members, and
    # the count of zero factors, per component
    t = np.prod(np.where(perfect[:, None], 1.0, instance.undet_factors), axis=0)
    z = incidence[perfect].sum(axis=0) if perfect.any() else np.zeros(instance.m)

    while int(members.sum()) > instance.r_D:
        q0 = vec * t * (z == 0)
        q1 = vec * t * (z == 1)
        losses = np.where(perfect, incidence @ q1, ratio * (incidence @ q0))
        losses[~members] = np.inf
        v = int(np.argmin(losses))
        members[v] = False
        in_cv = incidence[v] > 0
        if perfect[v]:
            z[in_cv] -= 1
        else:
            t[in_cv] /= instance.undet_factors[v][in_cv]
    return DetectorSet.of(np.flatnonzero(members))


@dataclass(frozen=True)
class CurvatureReport:
    """Curvature of the placement payoff and the derived greedy factors.

    `alpha_reverse` is the multiplicative guarantee of the removal greedy,
    infinite when the curvature reaches 1 (in that regime no polynomial
    approximation exists).  `alpha_forward_affine` is the (multiplier,
    additive) pair of the addition greedy's affine guarantee.
    """

    c: float
    d: int
    bound: float
    alpha_reverse: float
    alpha_forward_affine: tuple[float, float]


def _exclusion_products(instance: InspectionInstance) -> tuple[np.ndarray, np.ndarray]:
    """Nonzero-factor product and zero-factor count over all locations."""
    perfect = instance.detection_probs >= 1.0
    t = np.prod(np.where(perfect[:, None], 1.0, instance.undet_factors), axis=0)
    if perfect.any():
        z = instance.incidence[perfect].sum(axis=0)
    else:
        z = np.zeros(instance.m)
    return t, z


def curvature(instance: InspectionInstance, rho) -> CurvatureReport:
    """Curvature of the undetection payoff against a fixed marginal attack.

    Uses the closed forms for the two extreme marginal decreases: adding a
    detector to the empty placement removes p_v times the attacked mass it
    monitors, while adding it to the otherwise-full placement additionally
    discounts by every other detector watching the same component.
    """
    vec = _as_rho(rho, instance.m)
    p = instance.detection_probs
    incidence = instance.incidence
    gain_empty = p * (incidence @ vec)

    perfect = p >= 1.0
    ratio = np.divide(p, 1.0 - p, out=np.zeros_like(p), where=~perfect)
    t, z = _exclusion_products(instance)
    q0 = vec * t * (z == 0)
    q1 = vec * t * (z == 1)
    gain_full = np.where(perfect, incidence @ q1, ratio * (incidence @ q0))

    active = gain_empty > 0.0
    if not active.any():
        c = 0.0
    else:
        c = 1.0 - float(np.min(gain_full[active] / gain_empty[active]))
        c = min(max(c, 0.0), 1.0)

    d = instance.max_watchers
    bound = 1.0 - (1.0 - float(p.max())) ** d
    alpha_reverse = math.inf if c >= 1.0 else 1.0 / (1.0 - c)
    multiplier = 1.0 if c < 1e-12 else -math.expm1(-c) / c
    additive = (1.0 - multiplier) * instance.r_A
    return CurvatureReport(
        c=c,
        d=d,
        bound=bound,
        alpha_reverse=alpha_reverse,
        alpha_forward_affine=(multiplier, additive),
    )


def greedy_alpha_bound(instance: InspectionInstance) -> float:
    """Instance-level approximation factor 1 / (1 - max p)^d for the
    removal greedy; infinite when some detector is perfect."""
    p_max = float(instance.detection_probs.max())
    if p_max >= 1.0:
        return math.inf
    return 1.0 / (1.0 - p_max) ** instance.max_watchers
