"""Game model: instances, strategies, and the undetection payoff.

An instance consists of detector locations, attackable components, a
monitoring set per location, per-location detection probabilities, and
the two resource budgets.  The payoff of a pure profile (S, T) is the
expected number of attacks in T that every detector in S fails to see:

    u(S, T) = sum over e in T of  prod over v in S monitoring e  (1 - p_v)

All operations here are pure functions over immutable data and safe to
call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

#: default comparison tolerance for probabilities and payoffs
TOL = 1e-9


def _as_members(s) -> tuple[int, ...]:
    """Accept a DetectorSet or any iterable of location indices."""
    if isinstance(s, DetectorSet):
        return s.key()
    return tuple(sorted(set(int(v) for v in s)))


@dataclass(frozen=True)
class DetectorSet:
    """A pure defender action: the set of locations that host a detector."""

    members: frozenset

    @classmethod
    def of(cls, indices: Iterable[int]) -> "DetectorSet":
        return cls(frozenset(int(v) for v in indices))

    def key(self) -> tuple[int, ...]:
        """Canonical sorted-index form, used for dedup and tie-breaking."""
        return tuple(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class MixedDefenderStrategy:
    """Sparse distribution over detector sets."""

    support: tuple

    def __post_init__(self):
        probs = np.array([p for _, p in self.support], dtype=float)
        if len(self.support) == 0:
            raise ValidationError("defender strategy must have nonempty support")
        if np.any(probs < -TOL):
            raise ValidationError("defender strategy has a negative probability")
        if abs(probs.sum() - 1.0) > TOL:
            raise ValidationError(
                f"defender strategy probabilities sum to {probs.sum()!r}, not 1"
            )
        keys = [S.key() for S, _ in self.support]
        if len(set(keys)) != len(keys):
            raise ValidationError("defender strategy support sets must be distinct")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "MixedDefenderStrategy":
        """Build from (set-like, probability) pairs, merging duplicate sets."""
        merged: dict[tuple, float] = {}
        for s, p in pairs:
            ds = s if isinstance(s, DetectorSet) else DetectorSet.of(s)
            merged[ds.key()] = merged.get(ds.key(), 0.0) + float(p)
        return cls(tuple((DetectorSet.of(k), p) for k, p in sorted(merged.items())))

    @classmethod
    def point_mass(cls, s) -> "MixedDefenderStrategy":
        ds = s if isinstance(s, DetectorSet) else DetectorSet.of(s)
        return cls(((ds, 1.0),))

    def validate_for(self, instance: "InspectionInstance") -> None:
        for S, _ in self.support:
            instance.check_locations(S.members)
            if len(S) > instance.r_D:
                raise ValidationError(
                    f"support set {S.key()} exceeds the defender budget {instance.r_D}"
                )


@dataclass(frozen=True)
class MixedAttackStrategy:
    """Sparse distribution over component subsets of bounded cardinality."""

    support: tuple
    num_components: int

    def __post_init__(self):
        probs = np.array([p for _, p in self.support], dtype=float)
        if len(self.support) == 0:
            raise ValidationError("attack strategy must have nonempty support")
        if np.any(probs < -TOL):
            raise ValidationError("attack strategy has a negative probability")
        if abs(probs.sum() - 1.0) > TOL:
            raise ValidationError(
                f"attack strategy probabilities sum to {probs.sum()!r}, not 1"
            )
        for T, _ in self.support:
            for e in T:
                if not 0 <= int(e) < self.num_components:
                    raise ValidationError(f"attack set contains unknown component {e}")

    @classmethod
    def from_pairs(cls, pairs, num_components: int) -> "MixedAttackStrategy":
        merged: dict[tuple, float] = {}
        for t, p in pairs:
            key = tuple(sorted(set(int(e) for e in t)))
            merged[key] = merged.get(key, 0.0) + float(p)
        return cls(
            tuple((frozenset(k), p) for k, p in sorted(merged.items())),
            num_components,
        )

    def max_cardinality(self) -> int:
        return max(len(T) for T, _ in self.support)


@dataclass(frozen=True)
class MarginalAttackVector:
    """Per-component attack probabilities; a point of the capped simplex."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        object.__setattr__(self, "rho", rho)
        if rho.ndim != 1 or rho.size == 0:
            raise ValidationError("marginal vector must be a nonempty 1-d array")
        if np.any(np.isnan(rho)):
            raise ValidationError("marginal vector contains NaN")
        if np.any(rho < -1e-12) or np.any(rho > 1.0 + 1e-12):
            raise ValidationError("marginal entries must lie in [0, 1] within 1e-12")

    def budget_ok(self, r_A: int) -> bool:
        return float(self.rho.sum()) <= r_A + TOL


def _as_rho(rho, m: int | None = None) -> np.ndarray:
    vec = rho.rho if isinstance(rho, MarginalAttackVector) else np.asarray(rho, float)
    if m is not None and vec.shape != (m,):
        raise ValidationError(f"marginal vector has length {vec.size}, expected {m}")
    return vec


class InspectionInstance:
    """Immutable inspection game instance with dense internal indexing.

    External location/component names are preserved; every operation in
    this package works with the dense 0-based indices.
    """

    def __init__(
        self,
        locations: Sequence[str],
        components: Sequence[str],
        monitoring: Mapping[str, Iterable[str]],
        detection_probs: Mapping[str, float],
        r_D: int,
        r_A: int,
        metadata: dict | None = None,
    ):
        self.locations = tuple(str(v) for v in locations)
        self.components = tuple(str(e) for e in components)
        if len(self.locations) == 0:
            raise ValidationError("instance needs at least one location")
        if len(self.components) == 0:
            raise ValidationError("instance needs at least one component")
        if len(set(self.locations)) != len(self.locations):
            raise ValidationError("duplicate location names")
        if len(set(self.components)) != len(self.components):
            raise ValidationError("duplicate component names")

        self._loc_index = {v: i for i, v in enumerate(self.locations)}
        self._comp_index = {e: j for j, e in enumerate(self.components)}
        n, m = len(self.locations), len(self.components)

        monitoring_sets = []
        for v in self.locations:
            if v not in monitoring:
                raise ValidationError(f"no monitoring set given for location {v!r}")
            comps = set()
            for e in monitoring[v]:
                if e not in self._comp_index:
                    raise ValidationError(
                        f"monitoring set of {v!r} names unknown component {e!r}"
                    )
                comps.add(self._comp_index[e])
            if not comps:
                raise ValidationError(f"empty monitoring set for location {v!r}")
            monitoring_sets.append(frozenset(comps))
        self.monitoring_sets = tuple(monitoring_sets)

        p = np.empty(n)
        for v in self.locations:
            if v not in detection_probs:
                raise ValidationError(f"no detection probability for location {v!r}")
            p[self._loc_index[v]] = float(detection_probs[v])
        if np.any(p <= 0.0) or np.any(p > 1.0):
            bad = self.locations[int(np.argmax((p <= 0.0) | (p > 1.0)))]
            raise ValidationError(
                f"detection probability must be in (0, 1]; violated at {bad!r}"
            )
        self.detection_probs = p
        self.detection_probs.setflags(write=False)

        if not (isinstance(r_D, (int, np.integer)) and 1 <= r_D <= n):
            raise ValidationError(f"r_D must be an integer in [1, {n}], got {r_D!r}")
        if not (isinstance(r_A, (int, np.integer)) and 1 <= r_A <= m):
            raise ValidationError(f"r_A must be an integer in [1, {m}], got {r_A!r}")
        self.r_D = int(r_D)
        self.r_A = int(r_A)
        self.metadata = dict(metadata or {})

        # dense 0/1 incidence (location x component) and per-location
        # undetection factors: row v equals 1 - p_v on C_v and 1 elsewhere
        incidence = np.zeros((n, m))
        for i, comps in enumerate(self.monitoring_sets):
            incidence[i, list(comps)] = 1.0
        watchers = incidence.sum(axis=0)
        if np.any(watchers == 0):
            bad = self.components[int(np.argmax(watchers == 0))]
            raise ValidationError(f"component {bad!r} is not monitored from anywhere")
        self.incidence = incidence
        self.incidence.setflags(write=False)
        self.undet_factors = 1.0 - p[:, None] * incidence
        self.undet_factors.setflags(write=False)
        #: largest number of locations able to monitor a single component
        self.max_watchers = int(watchers.max())

    @property
    def n(self) -> int:
        return len(self.locations)

    @property
    def m(self) -> int:
        return len(self.components)

    def location_index(self, name: str) -> int:
        try:
            return self._loc_index[name]
        except KeyError:
            raise ValidationError(f"unknown location {name!r}") from None

    def component_index(self, name: str) -> int:
        try:
            return self._comp_index[name]
        except KeyError:
            raise ValidationError(f"unknown component {name!r}") from None

    def check_locations(self, indices: Iterable[int]) -> None:
        for v in indices:
            if not 0 <= int(v) < self.n:
                raise ValidationError(f"unknown location index {v}")

    def check_components(self, indices: Iterable[int]) -> None:
        for e in indices:
            if not 0 <= int(e) < self.m:
                raise ValidationError(f"unknown component index {e}")

    def with_budgets(self, r_D: int | None = None, r_A: int | None = None):
        """Copy of this instance with different resource budgets."""
        return InspectionInstance(
            self.locations,
            self.components,
            {v: [self.components[e] for e in sorted(self.monitoring_sets[i])]
             for i, v in enumerate(self.locations)},
            {v: float(self.detection_probs[i]) for i, v in enumerate(self.locations)},
            self.r_D if r_D is None else r_D,
            self.r_A if r_A is None else r_A,
            metadata=self.metadata,
        )

    def undetection_row(self, members) -> np.ndarray:
        """Vector u(S, e) over all components for one detector set."""
        idx = _as_members(members)
        self.check_locations(idx)
        if not idx:
            return np.ones(self.m)
        return np.prod(self.undet_factors[list(idx)], axis=0)

    def __repr__(self):
        return (
            f"InspectionInstance(n={self.n}, m={self.m}, "
            f"r_D={self.r_D}, r_A={self.r_A}, max_watchers={self.max_watchers})"
        )


def undetection_pure(instance: InspectionInstance, S, T) -> float:
    """Expected number of attacks in T left undetected by placement S.

    Defined for arbitrary subsets; resource budgets are enforced at the
    strategy layer, not here.
    """
    comp = sorted(set(int(e) for e in T))
    instance.check_components(comp)
    if not comp:
        return 0.0
    row = instance.undetection_row(S)
    return float(row[comp].sum())


def undetection_coefficients(
    instance: InspectionInstance, sigma_D: MixedDefenderStrategy
) -> np.ndarray:
    """Per-component undetection probabilities under a mixed placement.

    Entry e equals sum over support sets S of sigma(S) * u(S, e).
    Computed fresh on every call; instances are immutable so callers may
    cache the result for the lifetime of one certification.
    """
    sigma_D.validate_for(instance)
    coeffs = np.zeros(instance.m)
    for S, prob in sigma_D.support:
        coeffs += prob * instance.undetection_row(S)
    return coeffs


def expected_undetection(
    instance: InspectionInstance, sigma_D: MixedDefenderStrategy, rho
) -> float:
    """Expected undetected attacks for a mixed placement vs. a marginal attack."""
    vec = _as_rho(rho, instance.m)
    return float(undetection_coefficients(instance, sigma_D) @ vec)


def expected_undetection_mixed(
    instance: InspectionInstance,
    sigma_D: MixedDefenderStrategy,
    sigma_A: MixedAttackStrategy,
) -> float:
    """Expected undetected attacks for a pair of mixed strategies."""
    if sigma_A.num_components != instance.m:
        raise ValidationError("attack strategy dimension does not match instance")
    coeffs = undetection_coefficients(instance, sigma_D)
    total = 0.0
    for T, prob in sigma_A.support:
        if T:
            total += prob * float(coeffs[sorted(T)].sum())
    return total


def worst_case_attack_value(
    instance: InspectionInstance, sigma_D: MixedDefenderStrategy
) -> tuple[float, MarginalAttackVector]:
    """Best marginal attack against a fixed mixed placement.

    The payoff is linear in the marginal vector with nonnegative
    coefficients, so an optimum places full mass on the r_A components
    with the largest undetection probabilities.  Ties go to the lowest
    component index.
    """
    coeffs = undetection_coefficients(instance, sigma_D)
    order = np.lexsort((np.arange(instance.m), -coeffs))
    top = order[: instance.r_A]
    rho = np.zeros(instance.m)
    rho[top] = 1.0
    return float(coeffs[top].sum()), MarginalAttackVector(rho)
