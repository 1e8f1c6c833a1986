"""Three-step admission control.

Steps 1 and 2 run on the resource-agnostic PoP view: candidate PoPs per
VNF instance from geolocation and capability predicates, then assembly of
the admission request. Step 3 runs on the full resource map: a
backtracking search for a witness placement, including WAN routes for
every inter-PoP virtual link.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .catalog import (
    AffinityKind,
    Catalog,
    LinkDemand,
    VnfDemand,
    resolve_triplet,
)
from .design import NslDesign
from .errors import EmptyCandidateSet, IllegalTransition, SlicekitError
from .infra import AbstractPopView, InfrastructureMap, residual_bitrate, residual_capacity, simple_wan_paths
from .ordering import OrderStatus, ServiceOrder, effective_requirements
from .resources import ResourceVector, TimeWindow, normalize_windows

# (unit, instance_index) pinpoints one deployable VNF instance
InstanceKey = tuple[str, int]


class InfeasibleCause(str, Enum):
    CAPACITY = "CAPACITY"
    AFFINITY = "AFFINITY"
    CONNECTIVITY = "CONNECTIVITY"


class Infeasible(SlicekitError):
    """Step 3 found no witness; carries the binding constraint class."""

    def __init__(self, cause: InfeasibleCause, binding_constraint: str):
        super().__init__(f"{cause.value}: {binding_constraint}")
        self.cause = cause
        self.binding_constraint = binding_constraint


@dataclass(frozen=True)
class CandidateSet:
    """Candidate PoPs per VNF instance, computed without capacity data."""

    candidates: dict[InstanceKey, frozenset[str]]

    def __getitem__(self, key: InstanceKey) -> frozenset[str]:
        return self.candidates[key]

    def instances(self) -> list[InstanceKey]:
        return sorted(self.candidates)


@dataclass(frozen=True)
class AdmissionRequest:
    """Everything the resource-side feasibility check needs for one order."""

    order_id: str
    vnf_demands: tuple[VnfDemand, ...]
    link_demands: tuple[LinkDemand, ...]
    candidates: CandidateSet
    windows: tuple[TimeWindow, ...]

    def __post_init__(self):
        object.__setattr__(self, "windows", tuple(normalize_windows(list(self.windows))))


@dataclass(frozen=True)
class FeasibleSolution:
    """Witness placement: instance assignments plus one WAN route per
    inter-PoP virtual link (empty tuple when endpoints are co-located)."""

    assignment: dict[InstanceKey, str]
    link_routes: dict[str, tuple[str, ...]]

    def to_dict(self) -> dict:
        return {
            "assignment": {f"{unit}@{idx}": pop for (unit, idx), pop in sorted(self.assignment.items())},
            "link_routes": {unit: list(route) for unit, route in sorted(self.link_routes.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FeasibleSolution":
        assignment = {}
        for key, pop in data["assignment"].items():
            unit, idx = key.rsplit("@", 1)
            assignment[(unit, int(idx))] = pop
        return cls(
            assignment=assignment,
            link_routes={unit: tuple(route) for unit, route in data["link_routes"].items()},
        )


@dataclass(frozen=True)
class AdmissionVerdict:
    admitted: bool
    solution: FeasibleSolution | None = None
    sla: dict | None = None
    cause: str | None = None
    detail: str | None = None
    # carried for the caller's later stages, never serialized
    request: AdmissionRequest | None = field(default=None, compare=False)

    def to_dict(self) -> dict:
        return {
            "admitted": self.admitted,
            "solution": self.solution.to_dict() if self.solution else None,
            "sla": self.sla,
            "cause": self.cause,
            "detail": self.detail,
        }


def flatten_level(cat: Catalog, triplets) -> tuple[tuple[VnfDemand, ...], tuple[LinkDemand, ...]]:
    """Resolve every triplet of a slice level and merge the plans.

    Units get an ``m<i>/`` member prefix so that reusing one descriptor in
    several slice positions cannot collide.
    """
    vnf_out: list[VnfDemand] = []
    link_out: list[LinkDemand] = []
    for idx, triplet in enumerate(triplets):
        resolved = resolve_triplet(cat, triplet)
        prefix = f"m{idx}/"
        for d in resolved.vnf_entries:
            vnf_out.append(
                VnfDemand(
                    unit=prefix + d.unit,
                    vnf_ref=d.vnf_ref,
                    function_tag=d.function_tag,
                    instance_count=d.instance_count,
                    per_instance=d.per_instance,
                    affinity_rules=tuple(
                        type(r)(r.kind, prefix + r.peer) for r in d.affinity_rules
                    ),
                    reliability=d.reliability,
                )
            )
        for l in resolved.link_entries:
            link_out.append(
                LinkDemand(
                    unit=prefix + l.unit,
                    link_ref=l.link_ref,
                    bitrate_mbps=l.bitrate_mbps,
                    reliability_class=l.reliability_class,
                    endpoint_units=(prefix + l.endpoint_units[0], prefix + l.endpoint_units[1]),
                )
            )
    return tuple(vnf_out), tuple(link_out)


def compute_candidates(
    views: list[AbstractPopView],
    demands: tuple[VnfDemand, ...],
    geo_reqs: dict[str, frozenset[str]],
) -> CandidateSet:
    """Step 1: candidate PoPs per instance from the abstract view only.

    A PoP qualifies iff its region satisfies the geolocation requirement
    of the instance's function tag (untagged functions run anywhere) and
    it carries the HA flag when the plan demands a high-availability PoP.
    """
    if not views:
        raise ValueError("abstract view must be non-empty")
    out: dict[InstanceKey, frozenset[str]] = {}
    for demand in demands:
        regions = geo_reqs.get(demand.function_tag)
        eligible = frozenset(
            v.pop_id
            for v in views
            if (regions is None or v.region in regions)
            and (not demand.reliability.requires_ha_pop or "HA" in v.capabilities)
        )
        if not eligible:
            wants = f"regions {sorted(regions)}" if regions is not None else "any region"
            if demand.reliability.requires_ha_pop:
                wants += " with HA capability"
            raise EmptyCandidateSet(demand.unit, f"no PoP offers {wants}")
        for i in range(demand.instance_count):
            out[(demand.unit, i)] = eligible
    return CandidateSet(candidates=out)


def build_request(
    cat: Catalog,
    views: list[AbstractPopView],
    design: NslDesign,
    geo_reqs: dict[str, frozenset[str]],
    windows: tuple[TimeWindow, ...],
) -> AdmissionRequest:
    """Step 2: bundle the resolved target level, its candidates and the
    activity windows for the resource-side check."""
    vnf_demands, link_demands = flatten_level(cat, design.target_il.triplets)
    candidates = compute_candidates(views, vnf_demands, geo_reqs)
    return AdmissionRequest(
        order_id=design.order_id,
        vnf_demands=vnf_demands,
        link_demands=link_demands,
        candidates=candidates,
        windows=windows,
    )


def _pair_index(demands: tuple[VnfDemand, ...]) -> dict[InstanceKey, list[tuple[InstanceKey, AffinityKind]]]:
    """Expand group-level affinity rules to instance-pair constraints.

    Backup instances (the trailing ``backup_count`` indices of a group)
    carry an implicit DIFFERENT_POP constraint against their primaries.
    """
    counts = {d.unit: d.instance_count for d in demands}
    pairs: dict[tuple[InstanceKey, InstanceKey], AffinityKind] = {}

    def add(a: InstanceKey, b: InstanceKey, kind: AffinityKind):
        if a == b:
            return
        key = (a, b) if a < b else (b, a)
        existing = pairs.get(key)
        if existing is not None and existing is not kind:
            raise Infeasible(
                InfeasibleCause.AFFINITY,
                f"contradictory rules for {key[0][0]}#{key[0][1]} and {key[1][0]}#{key[1][1]}",
            )
        pairs[key] = kind

    for d in demands:
        for rule in d.affinity_rules:
            peer_count = counts.get(rule.peer)
            if peer_count is None:
                # peer inactive in this flavor: rule is vacuous
                continue
            for i in range(d.instance_count):
                for j in range(peer_count):
                    add((d.unit, i), (rule.peer, j), rule.kind)
        backups = range(d.instance_count - d.reliability.backup_count, d.instance_count)
        primaries = range(d.instance_count - d.reliability.backup_count)
        for i in backups:
            for j in primaries:
                add((d.unit, i), (d.unit, j), AffinityKind.DIFFERENT_POP)

    index: dict[InstanceKey, list[tuple[InstanceKey, AffinityKind]]] = {}
    for (a, b), kind in pairs.items():
        index.setdefault(a, []).append((b, kind))
        index.setdefault(b, []).append((a, kind))
    return index


def _effective_residuals(
    infra: InfrastructureMap, windows: tuple[TimeWindow, ...], beta: float
) -> tuple[dict[str, ResourceVector], dict[str, int]]:
    """Usable residual per PoP / WAN link: the worst case over all windows
    (demand is constant across the slice's active windows)."""
    pop_resid = {}
    for pop in infra.pops:
        vecs = [residual_capacity(infra, pop.id, w, beta) for w in windows]
        low = vecs[0]
        for v in vecs[1:]:
            low = low.componentwise_min(v)
        pop_resid[pop.id] = low
    link_resid = {
        link.id: min(residual_bitrate(infra, link.id, w, beta) for w in windows)
        for link in infra.wan_links
    }
    return pop_resid, link_resid


def _search(
    keys: list[InstanceKey],
    demand_of: dict[InstanceKey, ResourceVector],
    candidates: dict[InstanceKey, frozenset[str]],
    pair_index: dict,
    remaining: dict[str, ResourceVector] | None,
    leaf,
    progress: list,
):
    """Backtracking over instances, fewest-candidates-first, with forward
    checking on PoP residuals when ``remaining`` is given. ``leaf`` gets
    the complete assignment and may veto it (route search), making the
    overall search exhaustive over assignment x route combinations.
    """

    def compatible(key: InstanceKey, pop_id: str, assignment: dict) -> bool:
        for other, kind in pair_index.get(key, ()):
            placed = assignment.get(other)
            if placed is None:
                continue
            if kind is AffinityKind.SAME_POP and placed != pop_id:
                return False
            if kind is AffinityKind.DIFFERENT_POP and placed == pop_id:
                return False
        return True

    def options(key: InstanceKey, assignment: dict) -> list[str]:
        outs = []
        for pop_id in sorted(candidates[key]):
            if not compatible(key, pop_id, assignment):
                continue
            if remaining is not None and not demand_of[key].fits_within(remaining[pop_id]):
                continue
            outs.append(pop_id)
        return outs

    def place(i: int, assignment: dict):
        progress[0] = max(progress[0], i)
        if i == len(keys):
            return leaf(assignment)
        key = keys[i]
        for pop_id in options(key, assignment):
            assignment[key] = pop_id
            if remaining is not None:
                remaining[pop_id] = remaining[pop_id] - demand_of[key]
            # forward check: every later instance must keep some option
            viable = all(options(k, assignment) for k in keys[i + 1 :])
            if viable:
                solution = place(i + 1, assignment)
                if solution is not None:
                    return solution
            if remaining is not None:
                remaining[pop_id] = remaining[pop_id] + demand_of[key]
            del assignment[key]
        return None

    return place(0, {})


def check_feasibility(
    infra: InfrastructureMap,
    req: AdmissionRequest,
    beta: float = 1.5,
    max_hops: int = 4,
) -> FeasibleSolution:
    """Step 3: find a witness placement or raise Infeasible with the
    binding constraint class (AFFINITY, CAPACITY or CONNECTIVITY)."""
    demand_of: dict[InstanceKey, ResourceVector] = {}
    for d in req.vnf_demands:
        for i in range(d.instance_count):
            demand_of[(d.unit, i)] = d.per_instance
    for key in demand_of:
        if not req.candidates[key]:
            raise EmptyCandidateSet(key[0], "empty candidate set reached step 3")

    pair_index = _pair_index(req.vnf_demands)
    pop_resid, link_resid = _effective_residuals(infra, req.windows, beta)
    keys = sorted(demand_of, key=lambda k: (len(req.candidates[k]), k))
    cands = {k: req.candidates[k] for k in keys}

    path_cache: dict[tuple[str, str], list[list[str]]] = {}

    def paths_between(a: str, b: str) -> list[list[str]]:
        if (a, b) not in path_cache:
            path_cache[(a, b)] = simple_wan_paths(infra, a, b, max_hops)
        return path_cache[(a, b)]

    def route_all(assignment: dict) -> FeasibleSolution | None:
        budget = dict(link_resid)
        routes: dict[str, tuple[str, ...]] = {}

        def route(i: int):
            if i == len(req.link_demands):
                return FeasibleSolution(assignment=dict(assignment), link_routes=dict(routes))
            ld = req.link_demands[i]
            pa = assignment[(ld.endpoint_units[0], 0)]
            pb = assignment[(ld.endpoint_units[1], 0)]
            if pa == pb:
                routes[ld.unit] = ()
                found = route(i + 1)
                if found is not None:
                    return found
                del routes[ld.unit]
                return None
            for path in paths_between(pa, pb):
                if min(infra.wan_link(l).reliability_class for l in path) < ld.reliability_class:
                    continue
                if any(budget[l] < ld.bitrate_mbps for l in path):
                    continue
                routes[ld.unit] = tuple(path)
                for l in path:
                    budget[l] -= ld.bitrate_mbps
                found = route(i + 1)
                if found is not None:
                    return found
                for l in path:
                    budget[l] += ld.bitrate_mbps
                del routes[ld.unit]
            return None

        return route(0)

    progress = [0]
    solution = _search(keys, demand_of, cands, pair_index, dict(pop_resid), route_all, progress)
    if solution is not None:
        return solution

    # attribute the failure: retry with constraints peeled off
    relaxed = [0]
    if _search(keys, demand_of, cands, pair_index, None, lambda a: dict(a), relaxed) is None:
        raise Infeasible(
            InfeasibleCause.AFFINITY,
            "co-location rules admit no assignment within the candidate sets",
        )
    capacity_probe = [0]
    if _search(keys, demand_of, cands, pair_index, dict(pop_resid), lambda a: dict(a), capacity_probe) is None:
        stuck = keys[min(capacity_probe[0], len(keys) - 1)]
        raise Infeasible(
            InfeasibleCause.CAPACITY,
            f"residual capacity exhausted around {stuck[0]}#{stuck[1]} in the active windows",
        )
    raise Infeasible(
        InfeasibleCause.CONNECTIVITY,
        "placements exist but no WAN route combination carries the virtual links",
    )


def verify_solution(
    infra: InfrastructureMap,
    req: AdmissionRequest,
    solution: FeasibleSolution,
    beta: float = 1.5,
    max_hops: int = 4,
) -> list[str]:
    """Independent witness checker: plain constraint evaluation, no search.

    Returns human-readable violations; an empty list certifies the witness.
    """
    problems: list[str] = []
    demands = {d.unit: d for d in req.vnf_demands}

    # coverage and candidate membership
    for d in req.vnf_demands:
        for i in range(d.instance_count):
            key = (d.unit, i)
            pop = solution.assignment.get(key)
            if pop is None:
                problems.append(f"{d.unit}#{i}: unassigned")
            elif pop not in req.candidates[key]:
                problems.append(f"{d.unit}#{i}: {pop} not a candidate")
    if problems:
        return problems

    # affinity rules, evaluated directly from the demand records
    for d in req.vnf_demands:
        for rule in d.affinity_rules:
            peer = demands.get(rule.peer)
            if peer is None:
                continue
            for i in range(d.instance_count):
                for j in range(peer.instance_count):
                    if (d.unit, i) == (rule.peer, j):
                        continue
                    a = solution.assignment[(d.unit, i)]
                    b = solution.assignment[(rule.peer, j)]
                    if rule.kind is AffinityKind.SAME_POP and a != b:
                        problems.append(f"{d.unit}#{i} must share a PoP with {rule.peer}#{j}")
                    if rule.kind is AffinityKind.DIFFERENT_POP and a == b:
                        problems.append(f"{d.unit}#{i} must avoid the PoP of {rule.peer}#{j}")
        b0 = d.instance_count - d.reliability.backup_count
        for i in range(b0, d.instance_count):
            for j in range(b0):
                if solution.assignment[(d.unit, i)] == solution.assignment[(d.unit, j)]:
                    problems.append(f"backup {d.unit}#{i} shares a PoP with primary #{j}")

    # capacity per PoP per window
    per_pop: dict[str, ResourceVector] = {}
    for d in req.vnf_demands:
        for i in range(d.instance_count):
            pop = solution.assignment[(d.unit, i)]
            per_pop[pop] = per_pop.get(pop, ResourceVector.zero()) + d.per_instance
    for window in req.windows:
        for pop, load in per_pop.items():
            free = residual_capacity(infra, pop, window, beta)
            if not load.fits_within(free):
                problems.append(
                    f"PoP {pop}: load {load.as_tuple()} exceeds residual {free.as_tuple()} in {window}"
                )

    # routes: shape, connectivity, reliability, then aggregate bitrate
    per_link: dict[str, int] = {}
    for ld in req.link_demands:
        route = solution.link_routes.get(ld.unit)
        if route is None:
            problems.append(f"link {ld.unit}: no route recorded")
            continue
        pa = solution.assignment[(ld.endpoint_units[0], 0)]
        pb = solution.assignment[(ld.endpoint_units[1], 0)]
        if pa == pb:
            if route != ():
                problems.append(f"link {ld.unit}: co-located endpoints but non-empty route")
            continue
        if not route:
            problems.append(f"link {ld.unit}: endpoints on {pa} and {pb} but empty route")
            continue
        if len(route) > max_hops:
            problems.append(f"link {ld.unit}: route longer than {max_hops} hops")
        if len(set(route)) != len(route):
            problems.append(f"link {ld.unit}: route repeats a WAN link")
        here = pa
        broken = False
        for link_id in route:
            link = infra.wan_link(link_id)
            if here == link.endpoint_a:
                here = link.endpoint_b
            elif here == link.endpoint_b:
                here = link.endpoint_a
            else:
                problems.append(f"link {ld.unit}: {link_id} does not touch {here}")
                broken = True
                break
        if not broken and here != pb:
            problems.append(f"link {ld.unit}: route ends at {here}, not {pb}")
        if min(infra.wan_link(l).reliability_class for l in route) < ld.reliability_class:
            problems.append(f"link {ld.unit}: path reliability below class {ld.reliability_class}")
        for link_id in route:
            per_link[link_id] = per_link.get(link_id, 0) + ld.bitrate_mbps
    for link_id, load in per_link.items():
        free = min(residual_bitrate(infra, link_id, w, beta) for w in req.windows)
        if load > free:
            problems.append(f"WAN link {link_id}: booked {load} Mbps exceeds residual {free}")

    return problems


def admit(
    cat: Catalog,
    infra: InfrastructureMap,
    order: ServiceOrder,
    design: NslDesign,
    views: list[AbstractPopView],
    beta: float = 1.5,
    max_hops: int = 4,
) -> AdmissionVerdict:
    """Run all three steps and settle the order status.

    The caller provides the abstract views so the service-side steps
    never see the resource map itself.
    """
    if order.status is not OrderStatus.DESIGNED:
        raise IllegalTransition(order.status.value, OrderStatus.ADMITTED.value)
    reqs = effective_requirements(cat, order)
    try:
        request = build_request(cat, views, design, reqs.geo_reqs, reqs.temporal_reqs)
    except EmptyCandidateSet as exc:
        order.transition(OrderStatus.REJECTED)
        order.rejection_cause = f"geolocation: {exc.detail}"
        return AdmissionVerdict(admitted=False, cause="geolocation", detail=str(exc))
    try:
        solution = check_feasibility(infra, request, beta=beta, max_hops=max_hops)
    except Infeasible as exc:
        order.transition(OrderStatus.REJECTED)
        order.rejection_cause = f"{exc.cause.value}: {exc.binding_constraint}"
        return AdmissionVerdict(admitted=False, cause=exc.cause.value, detail=exc.binding_constraint)
    order.transition(OrderStatus.ADMITTED)
    sla = {
        "order_id": order.id,
        "tenant_id": order.tenant_id,
        "template_id": order.template_id,
        "performance": reqs.performance.to_dict(),
        "windows": [w.to_dict() for w in request.windows],
        "status": "DRAFT",
    }
    return AdmissionVerdict(admitted=True, solution=solution, sla=sla, request=request)
