"""Instance and result serialization plus the synthetic geometric generator.

Instance files are single JSON documents:

    {
      "locations":  ["v1", ...],
      "components": ["e1", ...],
      "monitoring": {"v1": ["e1", "e2"], ...},
      "p":          {"v1": 0.6, ...},
      "r_D": 2,
      "r_A": 2,
      "geometry": { ... optional metadata ... }
    }

Result documents carry the strategy profile, the value, the quality
certificates, and run diagnostics; serialization is canonical (sorted
keys, two-space indent) so equal documents are byte-identical.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .colgen import EquilibriumResult
from .errors import GenerationError, ValidationError
from .game import InspectionInstance, MarginalAttackVector, MixedDefenderStrategy

_INSTANCE_KEYS = {"locations", "components", "monitoring", "p", "r_D", "r_A", "geometry"}
_REQUIRED_KEYS = _INSTANCE_KEYS - {"geometry"}


def parse_instance(text: str) -> InspectionInstance:
    """Parse and fully validate an instance document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("instance document must be a JSON object")
    missing = _REQUIRED_KEYS - doc.keys()
    if missing:
        raise ValidationError(f"instance document lacks keys: {sorted(missing)}")
    unknown = doc.keys() - _INSTANCE_KEYS
    if unknown:
        raise ValidationError(f"instance document has unknown keys: {sorted(unknown)}")
    if not isinstance(doc["monitoring"], dict) or not isinstance(doc["p"], dict):
        raise ValidationError("'monitoring' and 'p' must be JSON objects")
    return InspectionInstance(
        locations=doc["locations"],
        components=doc["components"],
        monitoring=doc["monitoring"],
        detection_probs=doc["p"],
        r_D=doc["r_D"],
        r_A=doc["r_A"],
        metadata=doc.get("geometry"),
    )


def instance_to_document(instance: InspectionInstance) -> dict:
    doc = {
        "locations": list(instance.locations),
        "components": list(instance.components),
        "monitoring": {
            v: [instance.components[e] for e in sorted(instance.monitoring_sets[i])]
            for i, v in enumerate(instance.locations)
        },
        "p": {v: float(instance.detection_probs[i]) for i, v in enumerate(instance.locations)},
        "r_D": instance.r_D,
        "r_A": instance.r_A,
    }
    if instance.metadata:
        doc["geometry"] = instance.metadata
    return doc


def serialize_instance(instance: InspectionInstance) -> str:
    return _dumps(instance_to_document(instance))


def read_instance(path) -> InspectionInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def write_instance(instance: InspectionInstance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_instance(instance))


# -- geometric generator ---------------------------------------------------


def _point_segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from every point to the segment [a, b]."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1)


def generate_geometric(
    n: int,
    m_edges_target: int,
    radius: float = 0.08,
    p_low: float = 0.5,
    p_high: float = 1.0,
    r_A_fraction: float = 0.02,
    seed: int = 0,
    r_D: int | None = None,
    max_layouts: int = 20,
) -> InspectionInstance:
    """Random planar instance: locations are points in the unit square,
    components are short line segments, and a location monitors every
    segment within `radius` of it.

    Detection probabilities are drawn uniformly from [p_low, p_high] and
    the attack budget is the given fraction of the components (at least
    one).  Segments no location can see are discarded and redrawn.  When
    `r_D` is omitted it is set to the smallest prefix of a greedy cover
    that monitors at least 80 percent of the components.  Identical
    arguments always produce the identical instance.
    """
    if n < 1 or m_edges_target < 1:
        raise ValidationError("need at least one location and one component")
    if not (0 < p_low <= p_high <= 1.0):
        raise ValidationError("need 0 < p_low <= p_high <= 1")
    if radius <= 0 or r_A_fraction <= 0:
        raise ValidationError("radius and r_A_fraction must be positive")

    rng = np.random.default_rng(seed)
    for _ in range(max_layouts):
        points = rng.uniform(0.0, 1.0, size=(n, 2))
        segments = []
        monitored_by: list[np.ndarray] = []
        attempts_left = 60 * m_edges_target
        while len(segments) < m_edges_target and attempts_left > 0:
            attempts_left -= 1
            start = rng.uniform(0.0, 1.0, size=2)
            angle = rng.uniform(0.0, 2.0 * math.pi)
            length = rng.uniform(0.5, 2.0) * radius
            end = np.clip(start + length * np.array([math.cos(angle), math.sin(angle)]), 0.0, 1.0)
            dists = _point_segment_distances(points, start, end)
            watchers = np.flatnonzero(dists <= radius)
            if watchers.size == 0:
                continue  # unmonitored segment: discard and redraw
            segments.append((start, end))
            monitored_by.append(watchers)
        if len(segments) < m_edges_target:
            continue
        m = len(segments)
        coverage = [set() for _ in range(n)]
        for j, watchers in enumerate(monitored_by):
            for v in watchers:
                coverage[int(v)].add(j)
        if any(len(c) == 0 for c in coverage):
            continue  # a location sees nothing; redraw the whole layout

        locations = [f"v{i + 1}" for i in range(n)]
        components = [f"e{j + 1}" for j in range(m)]
        p = rng.uniform(p_low, p_high, size=n)
        r_a = max(1, math.ceil(r_A_fraction * m))
        r_d = r_D if r_D is not None else _greedy_cover_size(coverage, m)
        metadata = {
            "generator": {
                "name": "geometric-disc",
                "rng": "numpy.PCG64",
                "seed": int(seed),
                "radius": float(radius),
                "p_low": float(p_low),
                "p_high": float(p_high),
                "r_A_fraction": float(r_A_fraction),
            },
            "points": [[float(x), float(y)] for x, y in points],
            "segments": [
                [[float(a[0]), float(a[1])], [float(b[0]), float(b[1])]]
                for a, b in segments
            ],
        }
        return InspectionInstance(
            locations=locations,
            components=components,
            monitoring={
                locations[i]: [components[j] for j in sorted(coverage[i])]
                for i in range(n)
            },
            detection_probs={locations[i]: float(p[i]) for i in range(n)},
            r_D=min(r_d, n),
            r_A=r_a,
            metadata=metadata,
        )
    raise GenerationError(
        f"no valid layout with n={n}, m={m_edges_target}, radius={radius} "
        f"after {max_layouts} attempts; try a larger radius"
    )


def _greedy_cover_size(coverage: list[set], m: int, target: float = 0.8) -> int:
    covered: set[int] = set()
    picks = 0
    goal = math.ceil(target * m)
    while len(covered) < goal and picks < len(coverage):
        best, best_gain = 0, -1
        for i, comps in enumerate(coverage):
            gain = len(comps - covered)
            if gain > best_gain:
                best, best_gain = i, gain
        if best_gain <= 0:
            break
        covered |= coverage[best]
        picks += 1
    return max(1, picks)


# -- result documents --------------------------------------------------------


def _dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _encode_alpha(alpha: float):
    return "infinity" if math.isinf(alpha) else float(alpha)


def result_to_document(result: EquilibriumResult) -> dict:
    instance = result.instance
    sigma = [
        {"set": [instance.locations[v] for v in s.key()], "prob": float(p)}
        for s, p in sorted(result.sigma_D.support, key=lambda sp: sp[0].key())
    ]
    certs = result.certificates
    defender = certs.defender_best_response
    doc = {
        "value": float(result.value),
        "sigma_D": sigma,
        "rho_A": [float(x) for x in result.rho_A.rho],
        "certificates": {
            "attacker_best_response": float(certs.attacker_best_response),
            "defender_best_response": None if defender is None else float(defender),
            "alpha": _encode_alpha(certs.alpha),
            "epsilon": float(certs.epsilon),
            "schedule_satisfied": bool(certs.schedule_satisfied),
        },
        "diagnostics": {
            "iterations": int(result.diagnostics.get("iterations", result.iterations)),
            "columns": int(result.diagnostics.get("columns", result.columns_generated)),
            "wall_ms": round(float(result.diagnostics.get("wall_ms", 0.0)), 3),
        },
    }
    return doc


def serialize_result(result) -> str:
    """Canonical text form of a solve result (or of an already-parsed
    result document, which makes serialize(parse(text)) == text)."""
    if isinstance(result, EquilibriumResult):
        return _dumps(result_to_document(result))
    if isinstance(result, dict):
        return _dumps(result)
    raise ValidationError(f"cannot serialize {type(result).__name__} as a result")


def parse_result(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("result document must be a JSON object")
    for key in ("value", "sigma_D", "rho_A"):
        if key not in doc:
            raise ValidationError(f"result document lacks key {key!r}")
    if not doc["sigma_D"]:
        raise ValidationError("result document has an empty strategy support")
    return doc


def sigma_from_document(doc: dict, instance: InspectionInstance) -> MixedDefenderStrategy:
    pairs = []
    for atom in doc["sigma_D"]:
        members = [instance.location_index(name) for name in atom["set"]]
        pairs.append((members, float(atom["prob"])))
    return MixedDefenderStrategy.from_pairs(pairs)


def rho_from_document(doc: dict, instance: InspectionInstance) -> MarginalAttackVector | None:
    rho = doc.get("rho_A")
    if rho is None:
        return None
    vec = np.asarray(rho, dtype=float)
    if vec.shape != (instance.m,):
        raise ValidationError("rho_A length does not match the instance")
    return MarginalAttackVector(np.clip(vec, 0.0, 1.0))
