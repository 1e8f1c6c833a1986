"""Slice commissioning and run-time: descriptor assembly, per-slice
management-plane stubs, activation, traffic-driven scaling across the
instantiation-level ladder, and termination.

Scaling is vertical within the placement: the VNF-to-PoP footprint never
changes, only instance counts and resource levels, so a scale step is a
re-booking of the same PoPs and WAN links at a different size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import jsonschema
import yaml

from .admission import AdmissionRequest, CandidateSet, FeasibleSolution, flatten_level
from .catalog import Catalog, ConfigPrimitive, NslInstantiationLevel
from .design import NslDesign, TrafficProfile
from .errors import (
    CapacityRaced,
    ExposureViolation,
    IllegalTransition,
    OutsideActiveWindow,
    ParseError,
    ScalingRaced,
)
from .infra import InfrastructureMap
from .ordering import OrderStatus, ServiceOrder, effective_requirements
from .placement import build_reservations, commit_reservations, release
from .resources import PerformanceVector

METRIC_NAMESPACE = frozenset(
    {"throughput_mbps", "sessions", "latency_ms", "load_fraction", "availability"}
)

# float guard for threshold comparisons on computed coverage fractions
EPS = 1e-9


class ActionKind(str, Enum):
    SCALE_TO = "SCALE_TO"
    RECONFIGURE = "RECONFIGURE"
    ALERT = "ALERT"


@dataclass(frozen=True)
class Trigger:
    metric: str
    comparator: str
    threshold: float
    sustain_minutes: int = 0

    def __post_init__(self):
        if self.comparator not in (">", ">=", "<", "<="):
            raise ValueError(f"unknown comparator {self.comparator!r}")
        if self.sustain_minutes < 0:
            raise ValueError("sustain_minutes must be >= 0")

    def holds(self, value: float) -> bool:
        if self.comparator == ">":
            return value > self.threshold + EPS
        if self.comparator == ">=":
            return value >= self.threshold - EPS
        if self.comparator == "<":
            return value < self.threshold - EPS
        return value <= self.threshold + EPS


@dataclass(frozen=True)
class WorkflowAction:
    kind: ActionKind
    target_il: str | None = None
    primitive: str | None = None

    def __post_init__(self):
        if self.kind is ActionKind.SCALE_TO and not self.target_il:
            raise ValueError("SCALE_TO needs a target_il")
        if self.kind is ActionKind.RECONFIGURE and not self.primitive:
            raise ValueError("RECONFIGURE needs a primitive")


@dataclass(frozen=True)
class PolicyWorkflow:
    id: str
    trigger: Trigger
    action: WorkflowAction


@dataclass(frozen=True)
class MonitoringSpec:
    metrics: frozenset[str]
    reporting_period_s: int
    alarms: frozenset[str]

    def __post_init__(self):
        if self.reporting_period_s < 1:
            raise ValueError("reporting_period_s must be >= 1")


@dataclass(frozen=True)
class ChainingRule:
    from_vnf: str
    to_vnf: str
    match: str = "any"


@dataclass
class NslDescriptor:
    """Everything the per-slice management plane needs for the whole
    lifetime: workflows, the usable IL ladder, configuration knobs,
    chaining instructions and the monitoring contract."""

    slice_id: str
    target_il_id: str
    workflows: tuple[PolicyWorkflow, ...]
    il_set: tuple[NslInstantiationLevel, ...]
    il_capacity: dict[str, PerformanceVector]
    config_primitives: dict[str, tuple[ConfigPrimitive, ...]]
    chaining_rules: tuple[ChainingRule, ...]
    monitoring_spec: MonitoringSpec

    def __post_init__(self):
        ids = [il.id for il in self.il_set]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate instantiation level ids")
        if self.target_il_id not in ids:
            raise ValueError("il_set must contain the target level")
        primitives = {p.name for prims in self.config_primitives.values() for p in prims}
        for wf in self.workflows:
            if wf.action.kind is ActionKind.SCALE_TO and wf.action.target_il not in ids:
                raise ValueError(f"workflow {wf.id}: unknown scale target {wf.action.target_il}")
            if wf.action.kind is ActionKind.RECONFIGURE and wf.action.primitive not in primitives:
                raise ValueError(f"workflow {wf.id}: unknown primitive {wf.action.primitive}")
        _check_chain(self.chaining_rules)

    def level(self, il_id: str) -> NslInstantiationLevel:
        for il in self.il_set:
            if il.id == il_id:
                return il
        raise KeyError(il_id)

    def ladder(self) -> list[str]:
        """Level ids in ascending capacity order (construction order)."""
        return [il.id for il in self.il_set]

    def to_dict(self) -> dict:
        return {
            "slice_id": self.slice_id,
            "target_il_id": self.target_il_id,
            "workflows": [
                {
                    "id": wf.id,
                    "trigger": {
                        "metric": wf.trigger.metric,
                        "comparator": wf.trigger.comparator,
                        "threshold": wf.trigger.threshold,
                        "sustain_minutes": wf.trigger.sustain_minutes,
                    },
                    "action": {
                        "kind": wf.action.kind.value,
                        **({"target_il": wf.action.target_il} if wf.action.target_il else {}),
                        **({"primitive": wf.action.primitive} if wf.action.primitive else {}),
                    },
                }
                for wf in self.workflows
            ],
            "il_set": [il.to_dict() for il in self.il_set],
            "il_capacity": {k: v.to_dict() for k, v in sorted(self.il_capacity.items())},
            "config_primitives": {
                ref: [
                    {"name": p.name, **({"params": list(p.params)} if p.params else {})}
                    for p in prims
                ]
                for ref, prims in sorted(self.config_primitives.items())
            },
            "chaining_rules": [
                {"from_vnf": r.from_vnf, "to_vnf": r.to_vnf, "match": r.match}
                for r in self.chaining_rules
            ],
            "monitoring_spec": {
                "metrics": sorted(self.monitoring_spec.metrics),
                "reporting_period_s": self.monitoring_spec.reporting_period_s,
                "alarms": sorted(self.monitoring_spec.alarms),
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NslDescriptor":
        return cls(
            slice_id=data["slice_id"],
            target_il_id=data["target_il_id"],
            workflows=tuple(
                PolicyWorkflow(
                    id=wf["id"],
                    trigger=Trigger(
                        metric=wf["trigger"]["metric"],
                        comparator=wf["trigger"]["comparator"],
                        threshold=wf["trigger"]["threshold"],
                        sustain_minutes=wf["trigger"]["sustain_minutes"],
                    ),
                    action=WorkflowAction(
                        kind=ActionKind(wf["action"]["kind"]),
                        target_il=wf["action"].get("target_il"),
                        primitive=wf["action"].get("primitive"),
                    ),
                )
                for wf in data["workflows"]
            ),
            il_set=tuple(NslInstantiationLevel.from_dict(il) for il in data["il_set"]),
            il_capacity={
                k: PerformanceVector.from_dict(v) for k, v in data.get("il_capacity", {}).items()
            },
            config_primitives={
                ref: tuple(ConfigPrimitive(p["name"], tuple(p.get("params", []))) for p in prims)
                for ref, prims in data["config_primitives"].items()
            },
            chaining_rules=tuple(
                ChainingRule(r["from_vnf"], r["to_vnf"], r.get("match", "any"))
                for r in data["chaining_rules"]
            ),
            monitoring_spec=MonitoringSpec(
                metrics=frozenset(data["monitoring_spec"]["metrics"]),
                reporting_period_s=data["monitoring_spec"]["reporting_period_s"],
                alarms=frozenset(data["monitoring_spec"]["alarms"]),
            ),
        )


def _check_chain(rules: tuple[ChainingRule, ...]):
    """Chaining rules must form a weakly connected DAG."""
    if not rules:
        return
    nodes = {r.from_vnf for r in rules} | {r.to_vnf for r in rules}
    succ: dict[str, list[str]] = {n: [] for n in nodes}
    undirected: dict[str, set[str]] = {n: set() for n in nodes}
    for r in rules:
        succ[r.from_vnf].append(r.to_vnf)
        undirected[r.from_vnf].add(r.to_vnf)
        undirected[r.to_vnf].add(r.from_vnf)

    state: dict[str, int] = {}

    def visit(node: str):
        state[node] = 1
        for nxt in succ[node]:
            if state.get(nxt) == 1:
                raise ValueError(f"chaining rules contain a cycle through {nxt}")
            if nxt not in state:
                visit(nxt)
        state[node] = 2

    for node in nodes:
        if node not in state:
            visit(node)

    seen = set()
    stack = [next(iter(sorted(nodes)))]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(undirected[node])
    if seen != nodes:
        raise ValueError("chaining rules are not connected")


def _nsld_schema() -> dict:
    import json
    from importlib import resources as importlib_resources

    ref = importlib_resources.files("slicekit.schemas").joinpath("nsld.schema.json")
    return json.loads(ref.read_text())


def to_yaml(descriptor: NslDescriptor) -> str:
    """Canonical serialization: sorted keys, block style. Loading the
    output and dumping it again reproduces the bytes exactly."""
    return yaml.safe_dump(descriptor.to_dict(), sort_keys=True, default_flow_style=False)


def parse_nsld(text: str) -> NslDescriptor:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"descriptor document: {exc}") from exc
    try:
        jsonschema.validate(raw, _nsld_schema())
    except jsonschema.ValidationError as exc:
        raise ParseError(f"descriptor document: {exc.message}") from exc
    try:
        return NslDescriptor.from_dict(raw)
    except (ValueError, KeyError) as exc:
        raise ParseError(f"descriptor document: {exc}") from exc


# --- management-plane stubs ---------------------------------------------


@dataclass
class InstanceRecord:
    unit: str
    index: int
    pop_id: str


@dataclass
class Vnfm:
    """Per-VNF-group lifecycle manager stub: tracks the live instances."""

    unit: str
    vnf_ref: str
    instances: list[InstanceRecord] = field(default_factory=list)

    def instantiate(self, placements: list[str]):
        self.instances = [
            InstanceRecord(unit=self.unit, index=i, pop_id=pop) for i, pop in enumerate(placements)
        ]

    def teardown(self):
        self.instances = []


@dataclass
class NsOrchestratorStub:
    """Tracks the constituent NS records of one slice."""

    records: list[dict] = field(default_factory=list)

    def register(self, triplets):
        self.records = [t.to_dict() for t in triplets]

    def teardown(self):
        self.records = []


@dataclass
class TenantSdnController:
    rules: tuple[ChainingRule, ...] = ()
    programmed: bool = False

    def program(self):
        self.programmed = True

    def teardown(self):
        self.programmed = False


@dataclass
class NslManager:
    """Tenant-facing management stub. The exposure surface equals the
    order's operational requirements exactly; anything else is refused."""

    visible_metrics: frozenset[str]
    allowed_actions: frozenset[str]
    readings: dict[str, float] = field(default_factory=dict)
    alarms: list[str] = field(default_factory=list)

    def metrics(self) -> dict[str, float]:
        return {k: v for k, v in sorted(self.readings.items()) if k in self.visible_metrics}

    def query_metric(self, name: str) -> float:
        if name not in self.visible_metrics:
            raise ExposureViolation(f"metric {name}")
        return self.readings.get(name, 0.0)

    def authorize_action(self, action: str):
        if action not in self.allowed_actions:
            raise ExposureViolation(f"action {action}")


@dataclass
class ManagementPlane:
    nsl_manager: NslManager
    ns_orchestrator: NsOrchestratorStub
    vnfm_list: list[Vnfm]
    tenant_sdn_controller: TenantSdnController


class ScalingKind(str, Enum):
    SCALED = "SCALED"
    DEGRADED = "DEGRADED"


@dataclass(frozen=True)
class ScalingEvent:
    hour: int
    from_il: str
    to_il: str
    load: float
    kind: ScalingKind = ScalingKind.SCALED

    def to_dict(self) -> dict:
        return {
            "hour": self.hour,
            "from_il": self.from_il,
            "to_il": self.to_il,
            "load": self.load,
            "kind": self.kind.value,
        }


@dataclass
class SliceRuntime:
    slice_id: str
    order: ServiceOrder
    descriptor: NslDescriptor
    req: AdmissionRequest
    solution: FeasibleSolution
    required: PerformanceVector
    mgmt: ManagementPlane
    priority: int
    current_il: str
    held: dict[str, int] = field(default_factory=dict)
    last_load: float = 0.0
    hours_run: int = 0
    degraded_hours: int = 0
    timeline: list[dict] = field(default_factory=list)

    def __post_init__(self):
        if not 0 <= self.priority <= 9:
            raise ValueError("priority must be in 0..9")
        if self.current_il not in {il.id for il in self.descriptor.il_set}:
            raise ValueError("current_il must be a member of the descriptor's il_set")


def build_descriptor(
    design: NslDesign,
    cat: Catalog,
    required: PerformanceVector,
    visible_metrics: frozenset[str],
    hysteresis: float = 0.10,
    sustain_minutes: int = 0,
    reporting_period_s: int = 60,
) -> NslDescriptor:
    """Descriptor with one up and one down scale workflow per ladder
    boundary (hysteresis-widened on the way down)."""
    levels = design.il_set
    fractions = [design.il_capacity[il.id].coverage_fraction(required) for il in levels]
    workflows = []
    for i in range(len(levels) - 1):
        boundary = fractions[i]
        workflows.append(
            PolicyWorkflow(
                id=f"wfl-up-{i + 1}",
                trigger=Trigger("load_fraction", ">", boundary, sustain_minutes),
                action=WorkflowAction(ActionKind.SCALE_TO, target_il=levels[i + 1].id),
            )
        )
        workflows.append(
            PolicyWorkflow(
                id=f"wfl-down-{i + 1}",
                trigger=Trigger("load_fraction", "<=", boundary * (1.0 - hysteresis), sustain_minutes),
                action=WorkflowAction(ActionKind.SCALE_TO, target_il=levels[i].id),
            )
        )

    vnf_demands, _ = flatten_level(cat, design.target_il.triplets)
    primitives = {}
    for d in vnf_demands:
        vnf = cat.vnf(d.vnf_ref)
        if vnf.config_primitives and d.vnf_ref not in primitives:
            primitives[d.vnf_ref] = vnf.config_primitives
    chaining = tuple(
        ChainingRule(from_vnf=a.unit, to_vnf=b.unit)
        for a, b in zip(vnf_demands, vnf_demands[1:])
    )
    return NslDescriptor(
        slice_id=design.order_id,
        target_il_id=design.target_il.id,
        workflows=tuple(workflows),
        il_set=tuple(levels),
        il_capacity=dict(design.il_capacity),
        config_primitives=primitives,
        chaining_rules=chaining,
        monitoring_spec=MonitoringSpec(
            metrics=visible_metrics,
            reporting_period_s=reporting_period_s,
            alarms=frozenset({"DEGRADED"}),
        ),
    )


def prepare(
    cat: Catalog,
    order: ServiceOrder,
    design: NslDesign,
    req: AdmissionRequest,
    solution: FeasibleSolution,
    priority_table: dict[str, int] | None = None,
    default_priority: int = 4,
    hysteresis: float = 0.10,
    sustain_minutes: int = 0,
    reporting_period_s: int = 60,
) -> tuple[NslDescriptor, SliceRuntime]:
    """Commissioning: build the descriptor, instantiate the per-slice
    management plane with the order's exact exposure, settle priority."""
    if order.status is not OrderStatus.RESERVED:
        raise IllegalTransition(order.status.value, OrderStatus.PREPARED.value)
    reqs = effective_requirements(cat, order)
    descriptor = build_descriptor(
        design,
        cat,
        reqs.performance,
        visible_metrics=reqs.visible_metrics,
        hysteresis=hysteresis,
        sustain_minutes=sustain_minutes,
        reporting_period_s=reporting_period_s,
    )
    priority = (priority_table or {}).get(order.template_id, default_priority)
    mgmt = ManagementPlane(
        nsl_manager=NslManager(
            visible_metrics=reqs.visible_metrics,
            allowed_actions=reqs.allowed_actions,
        ),
        ns_orchestrator=NsOrchestratorStub(),
        vnfm_list=[
            Vnfm(unit=d.unit, vnf_ref=d.vnf_ref) for d in req.vnf_demands
        ],
        tenant_sdn_controller=TenantSdnController(rules=descriptor.chaining_rules),
    )
    runtime = SliceRuntime(
        slice_id=design.order_id,
        order=order,
        descriptor=descriptor,
        req=req,
        solution=solution,
        required=reqs.performance,
        mgmt=mgmt,
        priority=priority,
        current_il=descriptor.target_il_id,
    )
    order.transition(OrderStatus.PREPARED)
    return descriptor, runtime


def activate(runtime: SliceRuntime, now_minutes: int) -> SliceRuntime:
    """Bring the slice up at the target level (SLA holds from the first
    instant); requires the clock to sit inside an active window."""
    if runtime.order.status is not OrderStatus.PREPARED:
        raise IllegalTransition(runtime.order.status.value, OrderStatus.ACTIVE.value)
    inside = any(w.occurrences(now_minutes, now_minutes + 1) for w in runtime.req.windows)
    if not inside:
        raise OutsideActiveWindow(f"minute {now_minutes} is outside every active window")
    runtime.current_il = runtime.descriptor.target_il_id
    per_unit: dict[str, list[str]] = {}
    for (unit, idx), pop in sorted(runtime.solution.assignment.items()):
        per_unit.setdefault(unit, []).append(pop)
    for vnfm in runtime.mgmt.vnfm_list:
        vnfm.instantiate(per_unit.get(vnfm.unit, []))
    runtime.mgmt.ns_orchestrator.register(runtime.descriptor.level(runtime.current_il).triplets)
    runtime.mgmt.tenant_sdn_controller.program()
    runtime.order.transition(OrderStatus.ACTIVE)
    runtime.last_load = 1.0
    _update_readings(runtime)
    return runtime


def _update_readings(runtime: SliceRuntime):
    capacity = runtime.descriptor.il_capacity.get(runtime.current_il)
    availability = 1.0 - (runtime.degraded_hours / runtime.hours_run if runtime.hours_run else 0.0)
    runtime.mgmt.nsl_manager.readings = {
        "load_fraction": runtime.last_load,
        "throughput_mbps": runtime.last_load * runtime.required.throughput_mbps,
        "sessions": runtime.last_load * runtime.required.max_sessions,
        "latency_ms": capacity.max_latency_ms if capacity else 0.0,
        "availability": availability,
    }


def _scaled_assignment(
    runtime: SliceRuntime, demands, link_demands
) -> tuple[dict, dict]:
    """Placement for a different level of the same slice.

    Known units keep their PoPs (extra instances wrap around the target
    footprint); a unit new to this level inherits the slice's footprint
    round-robin. Routes are reused where the link unit is unchanged.
    """
    target_per_unit: dict[str, list[str]] = {}
    for (unit, idx), pop in sorted(runtime.solution.assignment.items()):
        target_per_unit.setdefault(unit, []).append(pop)
    footprint = sorted(set(runtime.solution.assignment.values()))

    assignment = {}
    for d in demands:
        pool = target_per_unit.get(d.unit, footprint)
        for i in range(d.instance_count):
            assignment[(d.unit, i)] = pool[i % len(pool)]

    routes = {}
    for ld in link_demands:
        known = runtime.solution.link_routes.get(ld.unit)
        if known is not None:
            routes[ld.unit] = known
            continue
        pa = assignment[(ld.endpoint_units[0], 0)]
        pb = assignment[(ld.endpoint_units[1], 0)]
        if pa == pb:
            routes[ld.unit] = ()
        else:
            raise ScalingRaced(f"no established route between {pa} and {pb} for new link {ld.unit}")
    return assignment, routes


def scale_to(
    cat: Catalog,
    infra: InfrastructureMap,
    runtime: SliceRuntime,
    il_id: str,
    beta: float = 1.5,
    make_id=None,
) -> None:
    """Re-book the slice at another level, atomically. Raises ScalingRaced
    when the delta cannot be committed (capacity gone)."""
    level = runtime.descriptor.level(il_id)
    demands, link_demands = flatten_level(cat, level.triplets)
    assignment, routes = _scaled_assignment(runtime, demands, link_demands)
    probe = AdmissionRequest(
        order_id=runtime.order.id,
        vnf_demands=demands,
        link_demands=link_demands,
        candidates=CandidateSet(candidates={}),
        windows=runtime.req.windows,
    )
    if make_id is None:
        from .placement import _next_ids

        make_id = _next_ids(infra).__next__
    solution = FeasibleSolution(assignment=assignment, link_routes=routes)
    mode = _current_mode(infra, runtime.order.id)
    new = build_reservations(probe, solution, runtime.order.id, mode, make_id)
    try:
        commit_reservations(infra, runtime.order.id, new, beta=beta)
    except CapacityRaced as exc:
        raise ScalingRaced(str(exc)) from exc
    runtime.current_il = il_id
    per_unit: dict[str, list[str]] = {}
    for (unit, idx), pop in sorted(assignment.items()):
        per_unit.setdefault(unit, []).append(pop)
    for vnfm in runtime.mgmt.vnfm_list:
        vnfm.instantiate(per_unit.get(vnfm.unit, []))


def _current_mode(infra: InfrastructureMap, order_id: str):
    from .infra import ReservationMode

    for r in infra.reservations:
        if r.order_id == order_id:
            return r.mode
    return ReservationMode.HARD


def step_simulation(
    cat: Catalog,
    infra: InfrastructureMap,
    runtime: SliceRuntime,
    trace: TrafficProfile | list[float],
    beta: float = 1.5,
    start_hour: int = 0,
    make_id=None,
    on_event=None,
) -> list[ScalingEvent]:
    """Drive the slice hour by hour through an offered-load trace.

    Workflows fire on the boundary triggers; a failed scale-up books a
    DEGRADED hour and raises an alarm instead of changing level.
    """
    if runtime.order.status is not OrderStatus.ACTIVE:
        raise IllegalTransition(runtime.order.status.value, "SCALED")
    loads = list(trace.hourly_load) if isinstance(trace, TrafficProfile) else list(trace)
    ladder = runtime.descriptor.ladder()
    ups = {wf.action.target_il: wf for wf in runtime.descriptor.workflows if wf.id.startswith("wfl-up-")}
    downs = {wf.action.target_il: wf for wf in runtime.descriptor.workflows if wf.id.startswith("wfl-down-")}
    events: list[ScalingEvent] = []

    def need(wf: PolicyWorkflow) -> int:
        return max(1, math.ceil(wf.trigger.sustain_minutes / 60))

    for offset, load in enumerate(loads):
        hour = start_hour + offset
        runtime.last_load = load
        runtime.hours_run += 1
        for wf in runtime.descriptor.workflows:
            if wf.trigger.metric == "load_fraction" and wf.trigger.holds(load):
                runtime.held[wf.id] = runtime.held.get(wf.id, 0) + 1
            else:
                runtime.held[wf.id] = 0

        degraded = False
        while True:
            idx = ladder.index(runtime.current_il)
            up = ups.get(ladder[idx + 1]) if idx + 1 < len(ladder) else None
            if up is not None and wf_ready(runtime, up, need(up)):
                source = runtime.current_il
                try:
                    scale_to(cat, infra, runtime, up.action.target_il, beta=beta, make_id=make_id)
                except ScalingRaced:
                    degraded = True
                    event = ScalingEvent(hour, source, up.action.target_il, load, ScalingKind.DEGRADED)
                    events.append(event)
                    runtime.degraded_hours += 1
                    runtime.mgmt.nsl_manager.alarms.append(
                        f"DEGRADED hour {hour}: stuck at {source}, load {load:.3f}"
                    )
                    if on_event is not None:
                        on_event(event)
                    break
                event = ScalingEvent(hour, source, runtime.current_il, load)
                events.append(event)
                if on_event is not None:
                    on_event(event)
                continue
            down = downs.get(ladder[idx - 1]) if idx > 0 else None
            if down is not None and wf_ready(runtime, down, need(down)):
                source = runtime.current_il
                try:
                    scale_to(cat, infra, runtime, down.action.target_il, beta=beta, make_id=make_id)
                except ScalingRaced as exc:
                    runtime.mgmt.nsl_manager.alarms.append(
                        f"scale-down blocked at hour {hour}: {exc}"
                    )
                    break
                event = ScalingEvent(hour, source, runtime.current_il, load)
                events.append(event)
                if on_event is not None:
                    on_event(event)
                continue
            break

        _update_readings(runtime)
        runtime.timeline.append(
            {
                "hour": hour,
                "il": runtime.current_il,
                "load": load,
                "degraded": degraded,
            }
        )
    return events


def wf_ready(runtime: SliceRuntime, wf: PolicyWorkflow, needed_hours: int) -> bool:
    return runtime.held.get(wf.id, 0) >= needed_hours


def terminate(infra: InfrastructureMap, runtime: SliceRuntime) -> None:
    """Release every booking and tear the management plane down.
    Calling it twice is a no-op."""
    if runtime.order.status is OrderStatus.TERMINATED:
        return
    if runtime.order.status not in (OrderStatus.ACTIVE, OrderStatus.PREPARED):
        raise IllegalTransition(runtime.order.status.value, OrderStatus.TERMINATED.value)
    release(infra, runtime.order.id)
    for vnfm in runtime.mgmt.vnfm_list:
        vnfm.teardown()
    runtime.mgmt.ns_orchestrator.teardown()
    runtime.mgmt.tenant_sdn_controller.teardown()
    runtime.order.transition(OrderStatus.TERMINATED)


def format_scaling_events(events: list[ScalingEvent]) -> str:
    """Columnar text table of a scaling-event stream."""
    header = ("HOUR", "FROM", "TO", "LOAD", "KIND")
    rows = [
        (str(e.hour), e.from_il, e.to_il, f"{e.load:.3f}", e.kind.value) for e in events
    ]
    widths = [
        max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
        for i in range(5)
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(5)))
    return "\n".join(lines)


def format_timeline(timeline: list[dict]) -> str:
    """Hour/IL/load step table, the slice's day at a glance."""
    header = ("HOUR", "IL", "LOAD", "DEGRADED")
    rows = [
        (str(t["hour"]), t["il"], f"{t['load']:.3f}", "yes" if t["degraded"] else "")
        for t in timeline
    ]
    widths = [
        max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
        for i in range(4)
    ]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(4)))
    return "\n".join(lines)
