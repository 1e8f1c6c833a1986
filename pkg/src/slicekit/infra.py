"""Multi-domain infrastructure model: PoPs, WAN links, reservations.

Two views are exposed: the full resource map (capacities, reservations,
residual math) used by the resource-side stages, and a resource-agnostic
projection (:func:`abstract_view`) that is structurally incapable of
leaking capacity data to the service-side stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from importlib import resources as importlib_resources
from pathlib import Path

import jsonschema
import yaml

from .errors import ParseError, UnknownPop, UnknownWanLink
from .resources import MINUTES_PER_DAY, Recurrence, ResourceVector, TimeWindow

BASE_CAPABILITIES = frozenset({"HA", "HIGH_IO", "GPU"})


@dataclass(frozen=True)
class PoP:
    id: str
    region: str
    capabilities: frozenset[str]
    capacity: ResourceVector
    owner_domain: str

    def __post_init__(self):
        if not self.region:
            raise ValueError(f"PoP {self.id}: region must be non-empty")


@dataclass(frozen=True)
class WanLink:
    id: str
    endpoint_a: str
    endpoint_b: str
    capacity_mbps: int
    reliability_class: int

    def __post_init__(self):
        if self.endpoint_a == self.endpoint_b:
            raise ValueError(f"WAN link {self.id}: endpoints must differ")
        if self.capacity_mbps < 0:
            raise ValueError(f"WAN link {self.id}: capacity_mbps must be >= 0")
        if not 1 <= self.reliability_class <= 3:
            raise ValueError(f"WAN link {self.id}: reliability_class must be in 1..3")


@dataclass(frozen=True)
class AbstractPopView:
    """Location and capabilities only; carries no resource quantities."""

    pop_id: str
    region: str
    capabilities: frozenset[str]


class ReservationMode(str, Enum):
    HARD = "HARD"
    SOFT = "SOFT"


@dataclass(frozen=True)
class Reservation:
    """Time-windowed booking against one PoP or one WAN link.

    Exactly one of ``resources`` (PoP bookings) or ``bitrate_mbps`` (WAN
    bookings) is set. SOFT bookings are overbookable: they weigh
    1/beta in the residual math and are admitted up to beta times the
    capacity when combined with HARD ones.
    """

    id: str
    order_id: str
    window: TimeWindow
    mode: ReservationMode
    pop_id: str | None = None
    wan_link_id: str | None = None
    resources: ResourceVector | None = None
    bitrate_mbps: int | None = None

    def __post_init__(self):
        if (self.pop_id is None) == (self.wan_link_id is None):
            raise ValueError("reservation must target exactly one of pop_id / wan_link_id")
        if self.pop_id is not None:
            if self.resources is None or self.bitrate_mbps is not None:
                raise ValueError("PoP reservation carries resources, not bitrate")
            if self.resources.as_tuple() == (0, 0, 0):
                raise ValueError("reservation amount must be > 0 in some component")
        else:
            if self.bitrate_mbps is None or self.resources is not None:
                raise ValueError("WAN reservation carries bitrate, not resources")
            if self.bitrate_mbps <= 0:
                raise ValueError("reservation bitrate must be > 0")

    def to_dict(self) -> dict:
        out = {
            "id": self.id,
            "order_id": self.order_id,
            "window": self.window.to_dict(),
            "mode": self.mode.value,
        }
        if self.pop_id is not None:
            out["pop_id"] = self.pop_id
            out["resources"] = self.resources.to_dict()
        else:
            out["wan_link_id"] = self.wan_link_id
            out["bitrate_mbps"] = self.bitrate_mbps
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Reservation":
        return cls(
            id=data["id"],
            order_id=data["order_id"],
            window=TimeWindow.from_dict(data["window"]),
            mode=ReservationMode(data["mode"]),
            pop_id=data.get("pop_id"),
            wan_link_id=data.get("wan_link_id"),
            resources=ResourceVector.from_dict(data["resources"]) if "resources" in data else None,
            bitrate_mbps=data.get("bitrate_mbps"),
        )


@dataclass
class InfrastructureMap:
    """PoP/WAN resource map plus the shared reservation ledger.

    Reservation commits are owned by the placement stage and must be
    serialized there (single-writer contract); everything here only reads.
    """

    pops: list[PoP]
    wan_links: list[WanLink]
    reservations: list[Reservation] = field(default_factory=list)

    def __post_init__(self):
        ids = [p.id for p in self.pops]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate PoP ids")
        link_ids = [w.id for w in self.wan_links]
        if len(link_ids) != len(set(link_ids)):
            raise ValueError("duplicate WAN link ids")
        known = set(ids)
        for link in self.wan_links:
            for ep in (link.endpoint_a, link.endpoint_b):
                if ep not in known:
                    raise ValueError(f"WAN link {link.id}: unknown endpoint {ep}")

    def pop(self, pop_id: str) -> PoP:
        for p in self.pops:
            if p.id == pop_id:
                return p
        raise UnknownPop(pop_id)

    def wan_link(self, link_id: str) -> WanLink:
        for w in self.wan_links:
            if w.id == link_id:
                return w
        raise UnknownWanLink(link_id)


def abstract_view(infra: InfrastructureMap) -> list[AbstractPopView]:
    """Resource-agnostic projection: one view per PoP, same order."""
    return [AbstractPopView(p.id, p.region, p.capabilities) for p in infra.pops]


def _sweep_horizon(query: TimeWindow, windows: list[TimeWindow]) -> tuple[int, int]:
    """Evaluation span that makes the max-concurrency sweep exact.

    A ONCE query is evaluated over itself. A DAILY query must consider
    every day on which some ONCE reservation is still live, plus one full
    period beyond, where only periodic activity remains.
    """
    if query.recurrence is Recurrence.ONCE:
        return query.start, query.end
    last_once_end = max(
        (w.end for w in windows if w.recurrence is Recurrence.ONCE),
        default=query.start,
    )
    hi = max(query.start + MINUTES_PER_DAY, last_once_end + MINUTES_PER_DAY)
    return query.start, hi


def _max_concurrent(
    query: TimeWindow,
    booked: list[tuple[TimeWindow, ReservationMode, tuple]],
    arity: int,
    beta: Fraction,
) -> tuple[Fraction, ...]:
    """Max over instants in the query window of hard + soft/beta load.

    ``booked`` holds (window, mode, amount-tuple) triples; the sweep is
    componentwise over ``arity`` components and exact (Fractions).
    """
    lo, hi = _sweep_horizon(query, [w for w, _, _ in booked])
    peak = tuple(Fraction(0) for _ in range(arity))
    for qs, qe in query.occurrences(lo, hi):
        concrete = []
        for window, mode, amount in booked:
            weight = Fraction(1) if mode is ReservationMode.HARD else 1 / beta
            for s, e in window.occurrences(qs, qe):
                concrete.append((s, e, weight, amount))
        points = sorted({qs, *(s for s, _, _, _ in concrete), *(e for _, e, _, _ in concrete)})
        for p in points:
            if p >= qe:
                continue
            usage = [Fraction(0)] * arity
            for s, e, weight, amount in concrete:
                if s <= p < e:
                    for i, component in enumerate(amount):
                        usage[i] += component * weight
            peak = tuple(max(a, b) for a, b in zip(peak, usage))
    return peak


def residual_capacity(
    infra: InfrastructureMap,
    pop_id: str,
    window: TimeWindow,
    beta: float = 1.5,
) -> ResourceVector:
    """Capacity left at a PoP over ``window``, floored to whole units.

    HARD reservations count in full; SOFT ones are scaled down by the
    overbooking factor beta, so committed SOFT load may reach beta times
    the capacity before the residual hits zero.
    """
    pop = infra.pop(pop_id)
    booked = [
        (r.window, r.mode, r.resources.as_tuple())
        for r in infra.reservations
        if r.pop_id == pop_id
    ]
    peak = _max_concurrent(window, booked, 3, Fraction(str(beta)))
    floored = tuple(max(0, int(cap - used)) for cap, used in zip(pop.capacity.as_tuple(), peak))
    return ResourceVector(*floored)


def residual_bitrate(
    infra: InfrastructureMap,
    link_id: str,
    window: TimeWindow,
    beta: float = 1.5,
) -> int:
    """Bitrate left on a WAN link over ``window``, same rules as PoPs."""
    link = infra.wan_link(link_id)
    booked = [
        (r.window, r.mode, (r.bitrate_mbps,))
        for r in infra.reservations
        if r.wan_link_id == link_id
    ]
    (peak,) = _max_concurrent(window, booked, 1, Fraction(str(beta)))
    return max(0, int(link.capacity_mbps - peak))


def simple_wan_paths(
    infra: InfrastructureMap,
    from_pop: str,
    to_pop: str,
    max_hops: int = 4,
) -> list[list[str]]:
    """All simple WAN paths between two PoPs up to ``max_hops`` links.

    Ordered shortest-first with lexicographic link-id tie-break, so the
    enumeration order is deterministic.
    """
    adjacency: dict[str, list[tuple[str, str]]] = {}
    for link in infra.wan_links:
        adjacency.setdefault(link.endpoint_a, []).append((link.endpoint_b, link.id))
        adjacency.setdefault(link.endpoint_b, []).append((link.endpoint_a, link.id))
    for edges in adjacency.values():
        edges.sort(key=lambda e: e[1])

    paths: list[list[str]] = []

    def walk(node: str, visited: set[str], trail: list[str]):
        if node == to_pop:
            paths.append(list(trail))
            return
        if len(trail) >= max_hops:
            return
        for neighbor, link_id in adjacency.get(node, []):
            if neighbor in visited:
                continue
            visited.add(neighbor)
            trail.append(link_id)
            walk(neighbor, visited, trail)
            trail.pop()
            visited.remove(neighbor)

    walk(from_pop, {from_pop}, [])
    paths.sort(key=lambda p: (len(p), p))
    return paths


def _load_schema(name: str) -> dict:
    ref = importlib_resources.files("slicekit.schemas").joinpath(name)
    import json

    return json.loads(ref.read_text())


def load_infrastructure(path: str | Path, extra_capabilities: set[str] | None = None) -> InfrastructureMap:
    """Load and validate the declarative infrastructure file.

    Capability flags must come from the base set plus any
    provider-configured extras.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if raw is None:
        raw = {}
    schema = _load_schema("infra.schema.json")
    try:
        jsonschema.validate(raw, schema)
    except jsonschema.ValidationError as exc:
        raise ParseError(f"{path}: {exc.message} (at {'/'.join(str(p) for p in exc.absolute_path)})") from exc

    allowed = BASE_CAPABILITIES | (extra_capabilities or set())
    pops = []
    for entry in raw.get("pops", []):
        caps = frozenset(entry.get("capabilities", []))
        unknown = caps - allowed
        if unknown:
            raise ParseError(f"PoP {entry['id']}: unknown capability flags {sorted(unknown)}")
        pops.append(
            PoP(
                id=entry["id"],
                region=entry["region"],
                capabilities=caps,
                capacity=ResourceVector.from_dict(entry["capacity"]),
                owner_domain=entry.get("owner_domain", "default"),
            )
        )
    links = [
        WanLink(
            id=entry["id"],
            endpoint_a=entry["endpoint_a"],
            endpoint_b=entry["endpoint_b"],
            capacity_mbps=entry["capacity_mbps"],
            reliability_class=entry["reliability_class"],
        )
        for entry in raw.get("wan_links", [])
    ]
    try:
        return InfrastructureMap(pops=pops, wan_links=links)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
