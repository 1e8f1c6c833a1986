"""Placement optimization and time-windowed resource reservation.

Admission proves a witness exists; this stage picks the best one under a
provider objective and books the resources. Commits follow a
snapshot-validate-commit discipline: the caller serializes them
(single-writer over the reservation ledger), validation is exact
(fractional soft-booking math), and a losing racer gets CapacityRaced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterator

from .admission import AdmissionRequest, FeasibleSolution, InstanceKey, _pair_index, verify_solution
from .catalog import AffinityKind
from .errors import CapacityRaced, IllegalTransition, NoFeasibleSolution
from .infra import (
    InfrastructureMap,
    Reservation,
    ReservationMode,
    _max_concurrent,
    residual_bitrate,
    residual_capacity,
    simple_wan_paths,
)
from .ordering import OrderStatus, ServiceOrder
from .resources import ResourceVector, TimeWindow

EXACT_MAX_INSTANCES = 10
EXACT_MAX_POPS = 8


class ObjectiveKind(str, Enum):
    MIN_RESOURCE = "MIN_RESOURCE"
    MIN_ENERGY = "MIN_ENERGY"


@dataclass(frozen=True)
class Objective:
    kind: ObjectiveKind
    weights: ResourceVector = ResourceVector(1, 1, 1)

    def __post_init__(self):
        if self.kind is ObjectiveKind.MIN_RESOURCE and min(self.weights.as_tuple()) <= 0:
            raise ValueError("MIN_RESOURCE weights must be positive in every component")


def _dot(weights: ResourceVector, demand: ResourceVector) -> int:
    return (
        weights.vcpu * demand.vcpu
        + weights.mem_gb * demand.mem_gb
        + weights.storage_gb * demand.storage_gb
    )


def solution_cost(
    req: AdmissionRequest,
    solution: FeasibleSolution,
    obj: Objective,
    preferred: frozenset[str] = frozenset(),
) -> tuple:
    """Comparable cost tuple. MIN_RESOURCE: weighted demand on
    non-preferred PoPs plus bitrate x hop count. MIN_ENERGY: distinct
    PoPs used, resource cost as tie-break."""
    resource = 0
    for d in req.vnf_demands:
        for i in range(d.instance_count):
            if solution.assignment[(d.unit, i)] not in preferred:
                resource += _dot(obj.weights, d.per_instance)
    for ld in req.link_demands:
        resource += ld.bitrate_mbps * len(solution.link_routes[ld.unit])
    if obj.kind is ObjectiveKind.MIN_ENERGY:
        return (len(set(solution.assignment.values())), resource)
    return (resource,)


def _instances(req: AdmissionRequest) -> dict[InstanceKey, ResourceVector]:
    out = {}
    for d in req.vnf_demands:
        for i in range(d.instance_count):
            out[(d.unit, i)] = d.per_instance
    return out


def _effective_residuals(infra, windows, beta):
    pop_resid = {}
    for pop in infra.pops:
        low = residual_capacity(infra, pop.id, windows[0], beta)
        for w in windows[1:]:
            low = low.componentwise_min(residual_capacity(infra, pop.id, w, beta))
        pop_resid[pop.id] = low
    link_resid = {
        link.id: min(residual_bitrate(infra, link.id, w, beta) for w in windows)
        for link in infra.wan_links
    }
    return pop_resid, link_resid


def _compatible(pair_index, key, pop_id, assignment) -> bool:
    for other, kind in pair_index.get(key, ()):
        placed = assignment.get(other)
        if placed is None:
            continue
        if kind is AffinityKind.SAME_POP and placed != pop_id:
            return False
        if kind is AffinityKind.DIFFERENT_POP and placed == pop_id:
            return False
    return True


def _best_routing(infra, req, assignment, link_resid, max_hops, path_cache):
    """Minimum-cost routing (bitrate x hops) for a fixed assignment, or
    None when no route combination fits the shared link budgets."""

    def paths_between(a, b):
        if (a, b) not in path_cache:
            path_cache[(a, b)] = simple_wan_paths(infra, a, b, max_hops)
        return path_cache[(a, b)]

    best: list = [None, None]  # routes, cost

    def walk(i, budget, routes, cost):
        if best[1] is not None and cost >= best[1]:
            return
        if i == len(req.link_demands):
            best[0], best[1] = dict(routes), cost
            return
        ld = req.link_demands[i]
        pa = assignment[(ld.endpoint_units[0], 0)]
        pb = assignment[(ld.endpoint_units[1], 0)]
        if pa == pb:
            routes[ld.unit] = ()
            walk(i + 1, budget, routes, cost)
            del routes[ld.unit]
            return
        for path in paths_between(pa, pb):
            if min(infra.wan_link(l).reliability_class for l in path) < ld.reliability_class:
                continue
            if any(budget[l] < ld.bitrate_mbps for l in path):
                continue
            routes[ld.unit] = tuple(path)
            for l in path:
                budget[l] -= ld.bitrate_mbps
            walk(i + 1, budget, routes, cost + ld.bitrate_mbps * len(path))
            for l in path:
                budget[l] += ld.bitrate_mbps
            del routes[ld.unit]

    walk(0, dict(link_resid), {}, 0)
    if best[0] is None:
        return None
    return best[0], best[1]


def optimize_exact(
    infra: InfrastructureMap,
    req: AdmissionRequest,
    obj: Objective,
    beta: float = 1.5,
    max_hops: int = 4,
    preferred: frozenset[str] = frozenset(),
) -> FeasibleSolution:
    """Branch-and-bound over assignments with exhaustive route choice at
    the leaves. Exact within the small-instance regime."""
    demand_of = _instances(req)
    pair_index = _pair_index(req.vnf_demands)
    pop_resid, link_resid = _effective_residuals(infra, req.windows, beta)
    keys = sorted(demand_of, key=lambda k: (len(req.candidates[k]), k))
    path_cache: dict = {}
    energy = obj.kind is ObjectiveKind.MIN_ENERGY

    best: list = [None, None]  # solution, cost tuple

    def partial_key(assignment, resource_cost):
        if energy:
            return (len(set(assignment.values())), resource_cost)
        return (resource_cost,)

    def place(i, assignment, remaining, resource_cost):
        # both components only grow as instances/links are added
        if best[1] is not None and partial_key(assignment, resource_cost) >= best[1]:
            return
        if i == len(keys):
            routing = _best_routing(infra, req, assignment, link_resid, max_hops, path_cache)
            if routing is None:
                return
            routes, link_cost = routing
            total = partial_key(assignment, resource_cost + link_cost)
            if best[1] is None or total < best[1]:
                best[0] = FeasibleSolution(assignment=dict(assignment), link_routes=routes)
                best[1] = total
            return
        key = keys[i]
        demand = demand_of[key]
        for pop_id in sorted(req.candidates[key]):
            if not _compatible(pair_index, key, pop_id, assignment):
                continue
            if not demand.fits_within(remaining[pop_id]):
                continue
            assignment[key] = pop_id
            remaining[pop_id] = remaining[pop_id] - demand
            step = 0 if pop_id in preferred else _dot(obj.weights, demand)
            place(i + 1, assignment, remaining, resource_cost + step)
            remaining[pop_id] = remaining[pop_id] + demand
            del assignment[key]

    place(0, {}, dict(pop_resid), 0)
    if best[0] is None:
        raise NoFeasibleSolution(f"order {req.order_id}: no feasible placement at optimization time")
    return best[0]


def optimize_heuristic(
    infra: InfrastructureMap,
    req: AdmissionRequest,
    obj: Objective,
    beta: float = 1.5,
    max_hops: int = 4,
    preferred: frozenset[str] = frozenset(),
    max_passes: int = 50,
) -> FeasibleSolution:
    """Greedy best-fit-decreasing seed plus 2-swap local search.

    Always returns a feasible solution (falls back to the admission
    search witness when greediness paints itself into a corner).
    """
    demand_of = _instances(req)
    pair_index = _pair_index(req.vnf_demands)
    pop_resid, link_resid = _effective_residuals(infra, req.windows, beta)
    path_cache: dict = {}

    def evaluate(assignment) -> tuple | None:
        """Cost of an assignment with its best routing; None if invalid."""
        loads: dict[str, ResourceVector] = {}
        for key, pop_id in assignment.items():
            if pop_id not in req.candidates[key]:
                return None
            if not _compatible(pair_index, key, pop_id, assignment):
                return None
            loads[pop_id] = loads.get(pop_id, ResourceVector.zero()) + demand_of[key]
        for pop_id, load in loads.items():
            if not load.fits_within(pop_resid[pop_id]):
                return None
        routing = _best_routing(infra, req, assignment, link_resid, max_hops, path_cache)
        if routing is None:
            return None
        routes, _ = routing
        solution = FeasibleSolution(assignment=dict(assignment), link_routes=routes)
        return solution_cost(req, solution, obj, preferred), solution

    # seed: heaviest demand first, locally cheapest PoP that fits
    keys = sorted(demand_of, key=lambda k: (-_dot(obj.weights, demand_of[k]), k))
    assignment: dict[InstanceKey, str] = {}
    remaining = dict(pop_resid)
    seeded = True
    for key in keys:
        options = []
        for pop_id in sorted(req.candidates[key]):
            if not _compatible(pair_index, key, pop_id, assignment):
                continue
            if not demand_of[key].fits_within(remaining[pop_id]):
                continue
            opens = pop_id not in set(assignment.values())
            step = 0 if pop_id in preferred else _dot(obj.weights, demand_of[key])
            rank = (opens, step, pop_id) if obj.kind is ObjectiveKind.MIN_ENERGY else (step, pop_id)
            options.append((rank, pop_id))
        if not options:
            seeded = False
            break
        pop_id = min(options)[1]
        assignment[key] = pop_id
        remaining[pop_id] = remaining[pop_id] - demand_of[key]

    current = evaluate(assignment) if seeded else None
    if current is None:
        from .admission import check_feasibility

        witness = check_feasibility(infra, req, beta=beta, max_hops=max_hops)
        current = evaluate(witness.assignment)
        if current is None:
            raise NoFeasibleSolution(f"order {req.order_id}: witness no longer evaluates as feasible")

    cost, solution = current
    improved = True
    passes = 0
    while improved and passes < max_passes:
        improved = False
        passes += 1
        for key in sorted(solution.assignment):
            for pop_id in sorted(req.candidates[key]):
                if pop_id == solution.assignment[key]:
                    continue
                trial = dict(solution.assignment)
                trial[key] = pop_id
                outcome = evaluate(trial)
                if outcome is not None and outcome[0] < cost:
                    cost, solution = outcome
                    improved = True
        pairs = sorted(solution.assignment)
        for a_i, a in enumerate(pairs):
            for b in pairs[a_i + 1 :]:
                pa, pb = solution.assignment[a], solution.assignment[b]
                if pa == pb or pb not in req.candidates[a] or pa not in req.candidates[b]:
                    continue
                trial = dict(solution.assignment)
                trial[a], trial[b] = pb, pa
                outcome = evaluate(trial)
                if outcome is not None and outcome[0] < cost:
                    cost, solution = outcome
                    improved = True
    return solution


def optimize(
    infra: InfrastructureMap,
    req: AdmissionRequest,
    obj: Objective,
    beta: float = 1.5,
    max_hops: int = 4,
    preferred: frozenset[str] = frozenset(),
) -> FeasibleSolution:
    """Pick the best feasible placement for the request.

    Exact branch-and-bound within the small regime, greedy plus local
    search beyond it; the result is re-certified by the independent
    witness checker either way.
    """
    n_instances = sum(d.instance_count for d in req.vnf_demands)
    if n_instances <= EXACT_MAX_INSTANCES and len(infra.pops) <= EXACT_MAX_POPS:
        solution = optimize_exact(infra, req, obj, beta=beta, max_hops=max_hops, preferred=preferred)
    else:
        solution = optimize_heuristic(infra, req, obj, beta=beta, max_hops=max_hops, preferred=preferred)
    problems = verify_solution(infra, req, solution, beta=beta, max_hops=max_hops)
    if problems:
        raise NoFeasibleSolution(f"optimizer produced an invalid witness: {problems[0]}")
    return solution


# --- reservation ledger -----------------------------------------------------


def _next_ids(infra: InfrastructureMap) -> Iterator[str]:
    n = 0
    for r in infra.reservations:
        m = re.fullmatch(r"rsv-(\d+)", r.id)
        if m:
            n = max(n, int(m.group(1)))
    while True:
        n += 1
        yield f"rsv-{n:04d}"


def _admissible(
    infra: InfrastructureMap,
    existing: list[Reservation],
    new: Reservation,
    beta: Fraction,
) -> str | None:
    """Exact check of one booking against a ledger snapshot.

    HARD load weighs 1, SOFT 1/beta; the rule 'peak + weight x amount <=
    capacity' preserves both ledger invariants (hard sums within
    capacity, total sums within beta x capacity).
    """
    weight = Fraction(1) if new.mode is ReservationMode.HARD else 1 / beta
    if new.pop_id is not None:
        booked = [(r.window, r.mode, r.resources.as_tuple()) for r in existing if r.pop_id == new.pop_id]
        peak = _max_concurrent(new.window, booked, 3, beta)
        capacity = infra.pop(new.pop_id).capacity.as_tuple()
        for cap, used, amount in zip(capacity, peak, new.resources.as_tuple()):
            if used + weight * amount > cap:
                return f"PoP {new.pop_id}: {amount} over residual in {new.window}"
        return None
    booked = [(r.window, r.mode, (r.bitrate_mbps,)) for r in existing if r.wan_link_id == new.wan_link_id]
    (peak,) = _max_concurrent(new.window, booked, 1, beta)
    if peak + weight * new.bitrate_mbps > infra.wan_link(new.wan_link_id).capacity_mbps:
        return f"WAN link {new.wan_link_id}: {new.bitrate_mbps} Mbps over residual in {new.window}"
    return None


def build_reservations(
    req: AdmissionRequest,
    solution: FeasibleSolution,
    order_id: str,
    mode: ReservationMode,
    make_id: Callable[[], str],
) -> list[Reservation]:
    """Aggregate the solution into per-PoP and per-link bookings, one per
    active window. Zero amounts are skipped (nothing to book)."""
    per_pop: dict[str, ResourceVector] = {}
    for d in req.vnf_demands:
        for i in range(d.instance_count):
            pop = solution.assignment[(d.unit, i)]
            per_pop[pop] = per_pop.get(pop, ResourceVector.zero()) + d.per_instance
    per_link: dict[str, int] = {}
    for ld in req.link_demands:
        for link_id in solution.link_routes[ld.unit]:
            per_link[link_id] = per_link.get(link_id, 0) + ld.bitrate_mbps

    out = []
    for window in req.windows:
        for pop_id in sorted(per_pop):
            amount = per_pop[pop_id]
            if amount.as_tuple() == (0, 0, 0):
                continue
            out.append(
                Reservation(
                    id=make_id(),
                    order_id=order_id,
                    window=window,
                    mode=mode,
                    pop_id=pop_id,
                    resources=amount,
                )
            )
        for link_id in sorted(per_link):
            if per_link[link_id] <= 0:
                continue
            out.append(
                Reservation(
                    id=make_id(),
                    order_id=order_id,
                    window=window,
                    mode=mode,
                    wan_link_id=link_id,
                    bitrate_mbps=per_link[link_id],
                )
            )
    return out


def commit_reservations(
    infra: InfrastructureMap,
    order_id: str,
    reservations: list[Reservation],
    beta: float = 1.5,
) -> list[Reservation]:
    """Atomically replace this order's bookings with ``reservations``.

    Validation runs against the ledger minus the order's old bookings;
    on any failure nothing changes and CapacityRaced is raised. The
    caller owns the single-writer lock.
    """
    beta_f = Fraction(str(beta))
    keep = [r for r in infra.reservations if r.order_id != order_id]
    for idx, new in enumerate(reservations):
        problem = _admissible(infra, keep + reservations[:idx], new, beta_f)
        if problem is not None:
            raise CapacityRaced(problem)
    infra.reservations[:] = keep + reservations
    return reservations


def reserve(
    infra: InfrastructureMap,
    order: ServiceOrder,
    req: AdmissionRequest,
    solution: FeasibleSolution,
    mode: ReservationMode = ReservationMode.HARD,
    beta: float = 1.5,
    make_id: Callable[[], str] | None = None,
) -> list[Reservation]:
    """Book the optimized solution; all-or-nothing.

    A losing racer (residuals moved since the admission snapshot) drops
    back to DESIGNED so the order can be re-admitted.
    """
    if order.status is not OrderStatus.ADMITTED:
        raise IllegalTransition(order.status.value, OrderStatus.RESERVED.value)
    if make_id is None:
        make_id = _next_ids(infra).__next__
    new = build_reservations(req, solution, order.id, mode, make_id)
    try:
        commit_reservations(infra, order.id, new, beta=beta)
    except CapacityRaced:
        order.transition(OrderStatus.DESIGNED)
        raise
    order.transition(OrderStatus.RESERVED)
    return new


def release(infra: InfrastructureMap, order_id: str) -> list[Reservation]:
    """Drop every booking of one order; residuals recover exactly because
    residual math re-derives from the remaining records."""
    gone = [r for r in infra.reservations if r.order_id == order_id]
    infra.reservations[:] = [r for r in infra.reservations if r.order_id != order_id]
    return gone


def utilization_rows(infra: InfrastructureMap, beta: float = 1.5) -> list[dict]:
    """Per-target, per-window booking summary for the export table."""
    rows = []
    seen_windows: dict[tuple[str, str], set[TimeWindow]] = {}
    for r in infra.reservations:
        kind = "pop" if r.pop_id is not None else "wan"
        target = r.pop_id or r.wan_link_id
        seen_windows.setdefault((kind, target), set()).add(r.window)
    for (kind, target), windows in sorted(seen_windows.items()):
        for window in sorted(windows, key=lambda w: (w.start, w.end, w.recurrence.value)):
            if kind == "pop":
                hard = soft = ResourceVector.zero()
                for r in infra.reservations:
                    if r.pop_id == target and r.window == window:
                        if r.mode is ReservationMode.HARD:
                            hard = hard + r.resources
                        else:
                            soft = soft + r.resources
                rows.append(
                    {
                        "kind": "pop",
                        "target": target,
                        "window": window,
                        "hard": f"{hard.as_tuple()}",
                        "soft": f"{soft.as_tuple()}",
                        "residual": f"{residual_capacity(infra, target, window, beta).as_tuple()}",
                    }
                )
            else:
                hard_b = sum(
                    r.bitrate_mbps
                    for r in infra.reservations
                    if r.wan_link_id == target and r.window == window and r.mode is ReservationMode.HARD
                )
                soft_b = sum(
                    r.bitrate_mbps
                    for r in infra.reservations
                    if r.wan_link_id == target and r.window == window and r.mode is ReservationMode.SOFT
                )
                rows.append(
                    {
                        "kind": "wan",
                        "target": target,
                        "window": window,
                        "hard": str(hard_b),
                        "soft": str(soft_b),
                        "residual": str(residual_bitrate(infra, target, window, beta)),
                    }
                )
    return rows


def format_utilization(infra: InfrastructureMap, beta: float = 1.5) -> str:
    """Columnar text table of the reservation ledger."""
    rows = utilization_rows(infra, beta)
    header = ("KIND", "TARGET", "WINDOW", "HARD", "SOFT", "RESIDUAL")
    rendered = [
        (
            row["kind"],
            row["target"],
            f"[{row['window'].start},{row['window'].end}) {row['window'].recurrence.value}",
            row["hard"],
            row["soft"],
            row["residual"],
        )
        for row in rows
    ]
    widths = [max(len(header[i]), *(len(r[i]) for r in rendered)) if rendered else len(header[i]) for i in range(6)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    for r in rendered:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(6)))
    return "\n".join(lines)
