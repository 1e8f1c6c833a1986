"""Slice resource description: topology mapping, triplet selection and
construction of the target plus optional slice instantiation levels.

The target level is sized for the ordered load; optional levels reuse
cheaper triplets of the same flavor so the slice can scale down when the
traffic model predicts slack hours.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .catalog import Catalog, NslInstantiationLevel, Triplet, resolve_triplet
from .errors import (
    AmbiguousCover,
    NoFlavorMatches,
    NoIlMeetsPerformance,
    UncoverableTopology,
)
from .ordering import EffectiveRequirements, OrderStatus, ServiceOrder, effective_requirements
from .resources import PerformanceVector

MAX_OPTIONAL_ILS = 6


class ProfileSource(str, Enum):
    HISTORICAL_MODEL = "HISTORICAL_MODEL"
    FLAT = "FLAT"


@dataclass(frozen=True)
class TrafficProfile:
    """Per-hour load fractions of the ordered target performance."""

    hourly_load: tuple[float, ...]
    source: ProfileSource = ProfileSource.HISTORICAL_MODEL

    def __post_init__(self):
        if len(self.hourly_load) != 24:
            raise ValueError(f"profile needs 24 hourly entries, got {len(self.hourly_load)}")
        for hour, value in enumerate(self.hourly_load):
            if not 0 < value <= 1.0:
                raise ValueError(f"hour {hour}: load fraction {value} outside (0, 1]")
        if abs(max(self.hourly_load) - 1.0) > 1e-9:
            raise ValueError("some hour must carry the full target load (max fraction 1.0)")

    @classmethod
    def flat(cls) -> "TrafficProfile":
        return cls(hourly_load=(1.0,) * 24, source=ProfileSource.FLAT)


def load_traffic_profile(path: str | Path) -> TrafficProfile:
    """Read a 24-row ``hour,fraction`` table."""
    fractions: dict[int, float] = {}
    with open(path, newline="") as handle:
        for row in csv.reader(handle):
            if not row or row[0].strip().startswith("#") or row[0].strip() == "hour":
                continue
            fractions[int(row[0])] = float(row[1])
    if sorted(fractions) != list(range(24)):
        raise ValueError(f"{path}: expected rows for hours 0..23")
    return TrafficProfile(hourly_load=tuple(fractions[h] for h in range(24)))


def profile_for_template(profiles_dir: str | Path | None, template_id: str) -> TrafficProfile:
    """Template-specific profile from ``<dir>/<template_id>.csv``, FLAT when absent."""
    if profiles_dir is not None:
        candidate = Path(profiles_dir) / f"{template_id}.csv"
        if candidate.exists():
            return load_traffic_profile(candidate)
    return TrafficProfile.flat()


@dataclass
class NslDesign:
    """Complete instantiation-level set for one ordered slice."""

    order_id: str
    target_il: NslInstantiationLevel
    optional_ils: list[NslInstantiationLevel]
    il_capacity: dict[str, PerformanceVector]

    @property
    def il_set(self) -> list[NslInstantiationLevel]:
        """All levels, capacity-ascending, target last."""
        return self.optional_ils + [self.target_il]

    def to_dict(self) -> dict:
        return {
            "order_id": self.order_id,
            "target_il": self.target_il.to_dict(),
            "optional_ils": [il.to_dict() for il in self.optional_ils],
            "il_capacity": {k: v.to_dict() for k, v in sorted(self.il_capacity.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NslDesign":
        return cls(
            order_id=data["order_id"],
            target_il=NslInstantiationLevel.from_dict(data["target_il"]),
            optional_ils=[NslInstantiationLevel.from_dict(il) for il in data["optional_ils"]],
            il_capacity={k: PerformanceVector.from_dict(v) for k, v in data["il_capacity"].items()},
        )


def map_topology(cat: Catalog, topology: list[str] | tuple[str, ...]) -> list[str]:
    """Cover the topology chain with NS descriptors, greedy longest-match.

    Each descriptor covers a contiguous run of node tags equal to its
    flattened function-tag chain. Ties on match length resolve to the
    lowest descriptor id, with an AmbiguousCover warning.
    """
    chains = {nsd_id: cat.function_tag_chain(nsd_id) for nsd_id in cat.nsds}
    cover: list[str] = []
    pos = 0
    topo = list(topology)
    while pos < len(topo):
        best_len = 0
        matches: list[str] = []
        for nsd_id in sorted(chains):
            chain = chains[nsd_id]
            if chain and topo[pos : pos + len(chain)] == chain:
                if len(chain) > best_len:
                    best_len, matches = len(chain), [nsd_id]
                elif len(chain) == best_len:
                    matches.append(nsd_id)
        if not matches:
            raise UncoverableTopology(f"no descriptor covers node tag {topo[pos]!r} at position {pos}")
        if len(matches) > 1:
            warnings.warn(
                f"descriptors {matches} tie for tags at position {pos}; using {matches[0]}",
                AmbiguousCover,
            )
        cover.append(matches[0])
        pos += best_len
    return cover


def _triplet_cost(cat: Catalog, triplet: Triplet) -> tuple[int, int, int]:
    return resolve_triplet(cat, triplet).total_resources.as_tuple()


def select_triplet(
    cat: Catalog,
    nsd_id: str,
    performance: PerformanceVector,
    functional: frozenset[str] | set[str] = frozenset(),
) -> Triplet:
    """Pick the deployment option of one descriptor that best matches the
    requirements: feasibility filter, then cheapest by aggregate resources
    (lexicographic vcpu, mem, storage; ids break remaining ties)."""
    nsd = cat.nsd(nsd_id)
    required = frozenset(functional)
    flavors = [fl for fl in nsd.flavors if required <= fl.feature_tags]
    if not flavors:
        raise NoFlavorMatches(
            f"{nsd_id}: no flavor provides all of {sorted(required)}"
        )
    best: tuple | None = None
    for flavor in flavors:
        for il in flavor.instantiation_levels:
            if not il.declared_capacity.meets(performance):
                continue
            triplet = Triplet(nsd_id, flavor.id, il.id)
            key = (_triplet_cost(cat, triplet), flavor.id, il.id)
            if best is None or key < best[0]:
                best = (key, triplet)
    if best is None:
        raise NoIlMeetsPerformance(
            f"{nsd_id}: no instantiation level reaches the required performance"
        )
    return best[1]


def _combo_capacity(cat: Catalog, triplets: tuple[Triplet, ...]) -> PerformanceVector:
    """End-to-end capacity of a slice level: the chain is bottlenecked by
    its weakest member (latency: by the slowest one)."""
    capacities = [
        cat.nsd(t.nsd_id).flavor(t.flavor_id).level(t.il_id).declared_capacity for t in triplets
    ]
    return PerformanceVector(
        throughput_mbps=min(c.throughput_mbps for c in capacities),
        max_sessions=min(c.max_sessions for c in capacities),
        max_latency_ms=max(c.max_latency_ms for c in capacities),
    )


def _scoped_functional(cat: Catalog, nsd_id: str, functional: frozenset[str]) -> frozenset[str]:
    """Functional tags relevant to one descriptor: a cache NS is not asked
    to provide the core-network features of its chain neighbours."""
    universe = frozenset().union(*(fl.feature_tags for fl in cat.nsd(nsd_id).flavors))
    return functional & universe


def _select_scaled(
    cat: Catalog,
    nsd_id: str,
    target: Triplet,
    scaled: PerformanceVector,
) -> Triplet:
    """Cheapest level of the target's flavor sufficient for a scaled-down
    load, restricted to levels the target capacity dominates."""
    flavor = cat.nsd(nsd_id).flavor(target.flavor_id)
    target_cap = flavor.level(target.il_id).declared_capacity
    best: tuple | None = None
    for il in flavor.instantiation_levels:
        if not il.declared_capacity.meets(scaled):
            continue
        if not target_cap.dominates(il.declared_capacity):
            continue
        triplet = Triplet(nsd_id, target.flavor_id, il.id)
        key = (_triplet_cost(cat, triplet), il.id)
        if best is None or key < best[0]:
            best = (key, triplet)
    # the target itself always qualifies, so best is never None
    return best[1]


def build_design(
    cat: Catalog,
    order: ServiceOrder,
    profile: TrafficProfile,
    max_optional: int = MAX_OPTIONAL_ILS,
) -> NslDesign:
    """Construct the target and optional slice instantiation levels.

    Raises the mapping/selection errors of the steps it composes; the
    caller decides how an order failure is recorded.
    """
    if order.status is not OrderStatus.SUBMITTED:
        raise ValueError(f"design requires a SUBMITTED order, got {order.status.value}")
    reqs = effective_requirements(cat, order)
    nsd_ids = map_topology(cat, reqs.topology)

    target_triplets = tuple(
        select_triplet(cat, nsd_id, reqs.performance, _scoped_functional(cat, nsd_id, reqs.functional))
        for nsd_id in nsd_ids
    )
    provided = frozenset().union(
        *(cat.nsd(t.nsd_id).flavor(t.flavor_id).feature_tags for t in target_triplets)
    )
    missing = reqs.functional - provided
    if missing:
        raise NoFlavorMatches(f"no descriptor in the cover provides {sorted(missing)}")

    # one candidate combo per hour; distinct combos become optional levels
    combo_hours: dict[tuple[Triplet, ...], list[int]] = {}
    for hour, fraction in enumerate(profile.hourly_load):
        scaled = reqs.performance.scaled(fraction)
        combo = tuple(
            _select_scaled(cat, nsd_id, target, scaled)
            for nsd_id, target in zip(nsd_ids, target_triplets)
        )
        combo_hours.setdefault(combo, []).append(hour)

    target_capacity = _combo_capacity(cat, target_triplets)
    optional_combos = []
    for combo, hours in combo_hours.items():
        if combo == target_triplets:
            continue
        capacity = _combo_capacity(cat, combo)
        if not (target_capacity.dominates(capacity) and capacity != target_capacity):
            continue
        optional_combos.append((combo, hours, capacity))

    if len(optional_combos) > max_optional:
        # keep the levels serving the most hours; nearer-to-target wins ties
        optional_combos.sort(
            key=lambda item: (
                -len(item[1]),
                -item[2].coverage_fraction(reqs.performance),
                tuple((t.nsd_id, t.flavor_id, t.il_id) for t in item[0]),
            )
        )
        optional_combos = optional_combos[:max_optional]

    # number levels by capacity rank, target last (the highest level)
    optional_combos.sort(key=lambda item: item[2].coverage_fraction(reqs.performance))
    levels = []
    capacities = {}
    for rank, (combo, _, capacity) in enumerate(optional_combos, start=1):
        il_id = f"{order.id}-il{rank}"
        levels.append(NslInstantiationLevel(id=il_id, triplets=combo))
        capacities[il_id] = capacity
    target_id = f"{order.id}-il{len(optional_combos) + 1}"
    target_il = NslInstantiationLevel(id=target_id, triplets=target_triplets)
    capacities[target_id] = target_capacity

    return NslDesign(
        order_id=order.id,
        target_il=target_il,
        optional_ils=levels,
        il_capacity=capacities,
    )
