"""Independent reference computations used only by the tests.

Nothing here may share code paths with the implementations under test:
the game value comes from the classic matrix-game LP over pure attack
sets (solved by scipy), projections come from projected gradient descent
with a Euclidean capped-simplex projection, and the greedy references
recompute payoffs from the definition at every step.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from inspection_game import undetection_pure
from inspection_game.game import InspectionInstance, _as_rho


def all_defender_sets(instance):
    for k in range(instance.r_D + 1):
        yield from itertools.combinations(range(instance.n), k)


def all_attack_sets(instance):
    for k in range(instance.r_A + 1):
        yield from itertools.combinations(range(instance.m), k)


def matrix_game_value(instance: InspectionInstance) -> float:
    """Value of the zero-sum game from the pure-action payoff matrix.

    Solves   min z  s.t.  sum_S sigma_S u(S, T) <= z  for every attack
    set T, sigma a distribution — the textbook formulation, independent
    of the compact master used by the package.
    """
    rows = list(all_defender_sets(instance))
    cols = list(all_attack_sets(instance))
    payoff = np.array(
        [[undetection_pure(instance, S, T) for T in cols] for S in rows]
    )
    n_rows = len(rows)
    c = np.zeros(n_rows + 1)
    c[-1] = 1.0
    a_ub = np.hstack([payoff.T, -np.ones((len(cols), 1))])
    a_eq = np.zeros((1, n_rows + 1))
    a_eq[0, :n_rows] = 1.0
    bounds = [(0, None)] * n_rows + [(None, None)]
    res = linprog(
        c, A_ub=a_ub, b_ub=np.zeros(len(cols)), A_eq=a_eq, b_eq=[1.0],
        bounds=bounds, method="highs",
    )
    assert res.status == 0, res.message
    return float(res.fun)


def min_pure_defense(instance: InspectionInstance, rho) -> float:
    """Exhaustive min over placements of the payoff against fixed marginals,
    recomputed from the definition."""
    vec = _as_rho(rho, instance.m)
    best = math.inf
    for S in all_defender_sets(instance):
        val = sum(vec[e] * undetection_pure(instance, S, [e]) for e in range(instance.m))
        best = min(best, val)
    return best


# -- projection oracle -------------------------------------------------------


def euclidean_capped_projection(y: np.ndarray, r_a: int) -> np.ndarray:
    """Euclidean projection onto {x in [0,1]^m : sum x <= r_a} by bisecting
    the budget multiplier."""
    x = np.clip(y, 0.0, 1.0)
    if x.sum() <= r_a:
        return x
    lo, hi = 0.0, float(np.max(y))
    for _ in range(200):
        theta = 0.5 * (lo + hi)
        if np.clip(y - theta, 0.0, 1.0).sum() > r_a:
            lo = theta
        else:
            hi = theta
    return np.clip(y - hi, 0.0, 1.0)


def _entropy_div(x: np.ndarray, ref: np.ndarray) -> float:
    pos = x > 0
    val = float(np.sum(x[pos] * np.log(x[pos] / ref[pos])))
    return val + float(ref.sum() - x.sum())


def pgd_entropy_projection(ref: np.ndarray, r_a: int, iters: int = 4000) -> tuple[np.ndarray, float]:
    """Projected gradient descent on the unnormalized relative entropy.

    Returns the iterate and its divergence; used as a convex-optimization
    oracle, so it favors accuracy over speed.
    """
    x = np.minimum(ref, 1.0)
    total = x.sum()
    if total > r_a:
        x = x * (r_a / total)
    step = 1.0
    fx = _entropy_div(x, ref)
    for _ in range(iters):
        grad = np.log(np.maximum(x, 1e-300) / ref)
        improved = False
        t = step
        while t > 1e-14:
            cand = euclidean_capped_projection(x - t * grad, r_a)
            fc = _entropy_div(cand, ref)
            if fc < fx - 1e-15:
                x, fx = cand, fc
                step = min(t * 2.0, 1.0)
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    return x, fx


# -- naive greedy references -------------------------------------------------


def naive_value(instance, members, rho) -> float:
    vec = _as_rho(rho, instance.m)
    return sum(
        vec[e] * undetection_pure(instance, members, [e]) for e in range(instance.m)
    )


def naive_forward_greedy(instance, rho) -> tuple[int, ...]:
    chosen: list[int] = []
    while len(chosen) < instance.r_D:
        base = naive_value(instance, chosen, rho)
        best_v, best_gain = None, -math.inf
        for v in range(instance.n):
            if v in chosen:
                continue
            gain = base - naive_value(instance, chosen + [v], rho)
            if gain > best_gain + 1e-15:
                best_v, best_gain = v, gain
        chosen.append(best_v)
    return tuple(sorted(chosen))


def naive_reverse_greedy(instance, rho) -> tuple[int, ...]:
    members = list(range(instance.n))
    while len(members) > instance.r_D:
        full = naive_value(instance, members, rho)
        best_v, best_loss = None, math.inf
        for v in members:
            rest = [w for w in members if w != v]
            loss = naive_value(instance, rest, rho) - full
            if loss < best_loss - 1e-15:
                best_v, best_loss = v, loss
        members.remove(best_v)
    return tuple(sorted(members))


# -- random instance pool ----------------------------------------------------


def random_instance(
    rng: np.random.Generator,
    max_n: int = 8,
    max_m: int = 10,
    max_r_d: int = 3,
    max_r_a: int = 2,
    p_low: float = 0.3,
    p_high: float = 0.9,
) -> InspectionInstance:
    """Small random instance with full component coverage and bounded
    detection probabilities (so greedy approximation factors stay finite)."""
    n = int(rng.integers(2, max_n + 1))
    m = int(rng.integers(2, max_m + 1))
    locations = [f"v{i + 1}" for i in range(n)]
    components = [f"e{j + 1}" for j in range(m)]
    monitoring: dict[str, list[str]] = {}
    covered = set()
    for i, v in enumerate(locations):
        size = int(rng.integers(1, min(3, m) + 1))
        comps = sorted(rng.choice(m, size=size, replace=False).tolist())
        monitoring[v] = [components[j] for j in comps]
        covered.update(comps)
    missing = [j for j in range(m) if j not in covered]
    for j in missing:  # patch coverage gaps onto random locations
        v = locations[int(rng.integers(0, n))]
        if components[j] not in monitoring[v]:
            monitoring[v].append(components[j])
    p = {v: float(rng.uniform(p_low, p_high)) for v in locations}
    r_d = int(rng.integers(1, min(max_r_d, n) + 1))
    r_a = int(rng.integers(1, min(max_r_a, m) + 1))
    return InspectionInstance(locations, components, monitoring, p, r_d, r_a)


def random_marginal(rng: np.random.Generator, m: int, r_a: int) -> np.ndarray:
    """Random point of the capped simplex, biased toward the boundary."""
    raw = rng.uniform(0.0, 1.0, size=m)
    if rng.uniform() < 0.3:
        raw[rng.uniform(size=m) < 0.3] = 0.0
    total = raw.sum()
    if total > 0 and rng.uniform() < 0.5:
        raw *= min(1.0, r_a / total)  # saturate the budget half the time
    else:
        raw *= rng.uniform(0.2, 1.0) * min(1.0, r_a / max(total, 1e-12))
    return np.clip(raw, 0.0, 1.0)
