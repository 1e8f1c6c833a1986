"""Pipeline driver: one stateful facade over ordering, design, admission,
placement and lifecycle.

Every stage transition is journaled to the event log with a payload rich
enough that replaying the log rebuilds the same state (the snapshot
equality the tests enforce). Reservation commits and scaling deltas
funnel through one lock; distinct orders otherwise run concurrently.
"""

from __future__ import annotations

import json
import threading
import time

from .admission import AdmissionRequest, FeasibleSolution, admit, build_request
from .catalog import Catalog
from .config import ProviderConfig
from .design import NslDesign, build_design, profile_for_template
from .errors import (
    CapacityRaced,
    IllegalTransition,
    NoFlavorMatches,
    NoIlMeetsPerformance,
    SlicekitError,
    UncoverableTopology,
    UnknownOrder,
    UnknownSlice,
    UnknownTenant,
)
from .events import EventLog, PipelineEvent, Stage
from .infra import InfrastructureMap, Reservation, abstract_view
from .lifecycle import (
    NslDescriptor,
    ScalingKind,
    SliceRuntime,
    activate,
    prepare,
    step_simulation,
    terminate,
)
from .ordering import OrderStatus, ServiceOrder, effective_requirements, submit_order
from .placement import optimize, release, reserve


class Orchestrator:
    """Stages A through E behind one object, event-sourced."""

    def __init__(
        self,
        cat: Catalog,
        infra: InfrastructureMap,
        config: ProviderConfig,
        log: EventLog | None = None,
        tenants: set[str] | None = None,
    ):
        self.cat = cat
        self.infra = infra
        self.config = config
        self.log = log if log is not None else EventLog()
        self.tenants = tenants
        self.orders: dict[str, ServiceOrder] = {}
        self.designs: dict[str, NslDesign] = {}
        self.solutions: dict[str, FeasibleSolution] = {}
        self.requests: dict[str, AdmissionRequest] = {}
        self.descriptors: dict[str, NslDescriptor] = {}
        self.priorities: dict[str, int] = {}
        self.runtimes: dict[str, SliceRuntime] = {}
        self.slices: dict[str, dict] = {}
        self._order_seq = 0
        self._rsv_seq = 0
        self._commit_lock = threading.RLock()
        self._order_locks: dict[str, threading.RLock] = {}

    # --- plumbing -------------------------------------------------------

    def _lock(self, order_id: str) -> threading.RLock:
        return self._order_locks.setdefault(order_id, threading.RLock())

    def _next_order_id(self) -> str:
        self._order_seq += 1
        return f"ord-{self._order_seq:04d}"

    def _next_rsv_id(self) -> str:
        self._rsv_seq += 1
        return f"rsv-{self._rsv_seq:04d}"

    def _emit(self, order_id: str, stage: Stage, payload: dict) -> PipelineEvent:
        return self.log.append(order_id, stage, payload)

    def get_order(self, order_id: str) -> ServiceOrder:
        order = self.orders.get(order_id)
        if order is None:
            raise UnknownOrder(order_id)
        return order

    def _request(self, order_id: str) -> AdmissionRequest:
        """Derived data; rebuilt deterministically when not cached."""
        if order_id not in self.requests:
            order = self.get_order(order_id)
            design = self.designs[order_id]
            reqs = effective_requirements(self.cat, order)
            self.requests[order_id] = build_request(
                self.cat, abstract_view(self.infra), design, reqs.geo_reqs, reqs.temporal_reqs
            )
        return self.requests[order_id]

    # --- stage A: ordering ------------------------------------------------

    def templates(self) -> list[dict]:
        out = []
        for template in self.cat.templates.values():
            entry = template.requirements_dict()
            entry["id"] = template.id
            entry["customizable"] = {
                path: (
                    {"choices": list(allowed.choices)}
                    if allowed.choices is not None
                    else {"min": allowed.min, "max": allowed.max}
                )
                for path, allowed in sorted(template.customizable.items())
            }
            out.append(entry)
        return out

    def submit(
        self,
        tenant_id: str,
        template_id: str,
        overrides: dict | None = None,
        parent_order_id: str | None = None,
    ) -> ServiceOrder:
        if self.tenants is not None and tenant_id not in self.tenants:
            raise UnknownTenant(tenant_id)
        with self._commit_lock:
            order_id = self._next_order_id()
        order = submit_order(
            self.cat,
            order_id,
            tenant_id,
            template_id,
            overrides or {},
            created_at=time.time(),
            parent_order_id=parent_order_id,
        )
        self.orders[order_id] = order
        self._emit(order_id, Stage.ORDERED, {"order": order.to_dict(), "status": order.status.value})
        return order

    # --- stages B-C: design and admission ---------------------------------

    def _reject(self, order: ServiceOrder, cause: str, detail: str) -> dict:
        if order.status is not OrderStatus.REJECTED:
            order.transition(OrderStatus.REJECTED)
        order.rejection_cause = f"{cause}: {detail}" if detail else cause
        self._emit(
            order.id,
            Stage.REJECTED,
            {
                "cause": cause,
                "detail": detail,
                "rejection_cause": order.rejection_cause,
                "status": order.status.value,
            },
        )
        return {"order_id": order.id, "status": "REJECTED", "admitted": False, "cause": cause, "detail": detail}

    def admit_order(self, order_id: str) -> dict:
        """Stages B and C: slice design, then three-step admission."""
        with self._lock(order_id):
            order = self.get_order(order_id)
            if order.status is OrderStatus.SUBMITTED:
                profile = profile_for_template(self.config.profiles_dir, order.template_id)
                try:
                    design = build_design(
                        self.cat, order, profile, max_optional=self.config.max_optional_ils
                    )
                except (UncoverableTopology, NoFlavorMatches, NoIlMeetsPerformance) as exc:
                    return self._reject(order, "design", str(exc))
                order.transition(OrderStatus.DESIGNED)
                self.designs[order_id] = design
                self._emit(
                    order_id,
                    Stage.DESIGNED,
                    {"design": design.to_dict(), "status": order.status.value},
                )
            elif order.status is not OrderStatus.DESIGNED:
                raise IllegalTransition(order.status.value, OrderStatus.ADMITTED.value)
            design = self.designs[order_id]
            verdict = admit(
                self.cat,
                self.infra,
                order,
                design,
                abstract_view(self.infra),
                beta=self.config.beta,
                max_hops=self.config.wan_max_hops,
            )
            if not verdict.admitted:
                self._emit(
                    order_id,
                    Stage.REJECTED,
                    {
                        "cause": verdict.cause,
                        "detail": verdict.detail,
                        "rejection_cause": order.rejection_cause,
                        "status": order.status.value,
                    },
                )
                return {
                    "order_id": order_id,
                    "status": "REJECTED",
                    "admitted": False,
                    "cause": verdict.cause,
                    "detail": verdict.detail,
                }
            self.requests[order_id] = verdict.request
            self.solutions[order_id] = verdict.solution
            self._emit(
                order_id,
                Stage.ADMITTED,
                {"verdict": verdict.to_dict(), "status": order.status.value},
            )
            return {
                "order_id": order_id,
                "status": "ADMITTED",
                "admitted": True,
                "sla": verdict.sla,
                "solution": verdict.solution.to_dict(),
            }

    def reserve_order(self, order_id: str) -> dict:
        """Stage D: optimize among feasible placements, then book it."""
        with self._lock(order_id):
            order = self.get_order(order_id)
            if order.status is not OrderStatus.ADMITTED:
                raise IllegalTransition(order.status.value, OrderStatus.RESERVED.value)
            request = self._request(order_id)
            solution = optimize(
                self.infra,
                request,
                self.config.objective_spec(),
                beta=self.config.beta,
                max_hops=self.config.wan_max_hops,
                preferred=self.config.preferred_pops,
            )
            with self._commit_lock:
                try:
                    booked = reserve(
                        self.infra,
                        order,
                        request,
                        solution,
                        mode=self.config.mode(),
                        beta=self.config.beta,
                        make_id=self._next_rsv_id,
                    )
                except CapacityRaced as exc:
                    self._emit(
                        order_id,
                        Stage.DESIGNED,
                        {"cause": "capacity-raced", "detail": str(exc), "status": order.status.value},
                    )
                    return {
                        "order_id": order_id,
                        "status": "DESIGNED",
                        "admitted": True,
                        "cause": "capacity-raced",
                        "detail": str(exc),
                    }
            self.solutions[order_id] = solution
            self._emit(
                order_id,
                Stage.RESERVED,
                {
                    "reservations": [r.to_dict() for r in booked],
                    "solution": solution.to_dict(),
                    "status": order.status.value,
                },
            )
            return {
                "order_id": order_id,
                "status": "RESERVED",
                "admitted": True,
                "solution": solution.to_dict(),
                "reservations": [r.to_dict() for r in booked],
            }

    def process(self, order_id: str) -> dict:
        """Stages B through D synchronously; the /process verb."""
        outcome = self.admit_order(order_id)
        if not outcome["admitted"]:
            return outcome
        return self.reserve_order(order_id)

    def validate(self, order_id: str) -> dict:
        """What-if probe: stages B-C against the live residuals, with no
        status change and no ledger writes."""
        order = self.get_order(order_id)
        clone = ServiceOrder.from_dict(order.to_dict())
        if clone.status in (OrderStatus.SUBMITTED, OrderStatus.REJECTED):
            clone.status = OrderStatus.SUBMITTED
            clone.rejection_cause = None
            profile = profile_for_template(self.config.profiles_dir, clone.template_id)
            try:
                design = build_design(
                    self.cat, clone, profile, max_optional=self.config.max_optional_ils
                )
            except (UncoverableTopology, NoFlavorMatches, NoIlMeetsPerformance) as exc:
                return {
                    "order_id": order_id,
                    "admitted": False,
                    "cause": "design",
                    "detail": str(exc),
                }
            clone.transition(OrderStatus.DESIGNED)
        elif order_id in self.designs:
            design = self.designs[order_id]
            clone.status = OrderStatus.DESIGNED
        else:
            raise IllegalTransition(clone.status.value, OrderStatus.DESIGNED.value)
        verdict = admit(
            self.cat,
            self.infra,
            clone,
            design,
            abstract_view(self.infra),
            beta=self.config.beta,
            max_hops=self.config.wan_max_hops,
        )
        out = {
            "order_id": order_id,
            "admitted": verdict.admitted,
            "cause": verdict.cause,
            "detail": verdict.detail,
        }
        if verdict.admitted:
            out["solution"] = verdict.solution.to_dict()
            out["sla"] = verdict.sla
        return out

    # --- stage E and run-time ----------------------------------------------

    def _runtime(self, order_id: str) -> SliceRuntime:
        if order_id in self.runtimes:
            return self.runtimes[order_id]
        order = self.get_order(order_id)
        if order.status in (OrderStatus.PREPARED, OrderStatus.ACTIVE) and order_id in self.descriptors:
            self._rehydrate(order_id)
            return self.runtimes[order_id]
        raise UnknownSlice(order_id)

    def _rehydrate(self, order_id: str):
        """Rebuild a live runtime from replayed state (fresh process)."""
        from .lifecycle import ManagementPlane, NslManager, NsOrchestratorStub, TenantSdnController, Vnfm

        order = self.orders[order_id]
        descriptor = self.descriptors[order_id]
        request = self._request(order_id)
        solution = self.solutions[order_id]
        reqs = effective_requirements(self.cat, order)
        mgmt = ManagementPlane(
            nsl_manager=NslManager(
                visible_metrics=reqs.visible_metrics, allowed_actions=reqs.allowed_actions
            ),
            ns_orchestrator=NsOrchestratorStub(),
            vnfm_list=[Vnfm(unit=d.unit, vnf_ref=d.vnf_ref) for d in request.vnf_demands],
            tenant_sdn_controller=TenantSdnController(rules=descriptor.chaining_rules),
        )
        info = self.slices.get(order_id, {})
        runtime = SliceRuntime(
            slice_id=order_id,
            order=order,
            descriptor=descriptor,
            req=request,
            solution=solution,
            required=reqs.performance,
            mgmt=mgmt,
            priority=self.priorities.get(order_id, self.config.default_priority),
            current_il=info.get("current_il", descriptor.target_il_id),
            degraded_hours=info.get("degraded_hours", 0),
        )
        if order.status is OrderStatus.ACTIVE:
            per_unit: dict[str, list[str]] = {}
            for (unit, _), pop in sorted(solution.assignment.items()):
                per_unit.setdefault(unit, []).append(pop)
            for vnfm in mgmt.vnfm_list:
                vnfm.instantiate(per_unit.get(vnfm.unit, []))
            mgmt.ns_orchestrator.register(descriptor.level(runtime.current_il).triplets)
            mgmt.tenant_sdn_controller.program()
            runtime.last_load = 1.0
            from .lifecycle import _update_readings

            _update_readings(runtime)
        self.runtimes[order_id] = runtime

    def activate_slice(self, order_id: str, at_minute: int | None = None) -> dict:
        with self._lock(order_id):
            order = self.get_order(order_id)
            at = int(time.time() // 60) if at_minute is None else at_minute
            if order.status is OrderStatus.RESERVED:
                descriptor, runtime = prepare(
                    self.cat,
                    order,
                    self.designs[order_id],
                    self._request(order_id),
                    self.solutions[order_id],
                    priority_table=self.config.priority_table,
                    default_priority=self.config.default_priority,
                    hysteresis=self.config.hysteresis,
                    sustain_minutes=self.config.sustain_minutes,
                    reporting_period_s=self.config.reporting_period_s,
                )
                self.descriptors[order_id] = descriptor
                self.priorities[order_id] = runtime.priority
                self.runtimes[order_id] = runtime
                self.slices[order_id] = {
                    "current_il": runtime.current_il,
                    "degraded_hours": 0,
                }
                self._emit(
                    order_id,
                    Stage.PREPARED,
                    {
                        "descriptor": descriptor.to_dict(),
                        "priority": runtime.priority,
                        "status": order.status.value,
                    },
                )
            runtime = self._runtime(order_id)
            activate(runtime, at)
            self.slices[order_id]["current_il"] = runtime.current_il
            self._emit(
                order_id,
                Stage.ACTIVE,
                {"at_minute": at, "current_il": runtime.current_il, "status": order.status.value},
            )
            return {
                "order_id": order_id,
                "status": order.status.value,
                "current_il": runtime.current_il,
                "priority": runtime.priority,
            }

    def simulate(self, order_id: str, loads: list[float], start_hour: int = 0) -> list[dict]:
        """Feed an offered-load trace to an active slice, journaling every
        scale and degradation."""
        with self._lock(order_id), self._commit_lock:
            runtime = self._runtime(order_id)

            def on_event(event):
                info = self.slices[order_id]
                info["current_il"] = runtime.current_il
                info["degraded_hours"] = runtime.degraded_hours
                stage = Stage.DEGRADED if event.kind is ScalingKind.DEGRADED else Stage.SCALED
                payload = event.to_dict()
                payload["reservations"] = [
                    r.to_dict() for r in self.infra.reservations if r.order_id == order_id
                ]
                payload["status"] = runtime.order.status.value
                self._emit(order_id, stage, payload)

            events = step_simulation(
                self.cat,
                self.infra,
                runtime,
                loads,
                beta=self.config.beta,
                start_hour=start_hour,
                make_id=self._next_rsv_id,
                on_event=on_event,
            )
            return [e.to_dict() for e in events]

    def terminate_slice(self, order_id: str) -> dict:
        with self._lock(order_id), self._commit_lock:
            order = self.get_order(order_id)
            if order.status is OrderStatus.TERMINATED:
                return {"order_id": order_id, "status": order.status.value}
            runtime = self._runtime(order_id)
            terminate(self.infra, runtime)
            self._emit(order_id, Stage.TERMINATED, {"status": order.status.value})
            return {"order_id": order_id, "status": order.status.value}

    # --- observability ----------------------------------------------------

    def order_events(self, order_id: str) -> list[dict]:
        self.get_order(order_id)
        return [e.to_dict() for e in self.log.for_order(order_id)]

    def slice_metrics(self, order_id: str) -> dict:
        runtime = self._runtime(order_id)
        return runtime.mgmt.nsl_manager.metrics()

    def slice_timeline(self, order_id: str) -> list[dict]:
        runtime = self._runtime(order_id)
        return list(runtime.timeline)

    def snapshot(self) -> str:
        """Canonical JSON of the replayable state."""
        state = {
            "orders": {oid: order.to_dict() for oid, order in self.orders.items()},
            "designs": {oid: design.to_dict() for oid, design in self.designs.items()},
            "solutions": {oid: sol.to_dict() for oid, sol in self.solutions.items()},
            "reservations": sorted(
                (r.to_dict() for r in self.infra.reservations), key=lambda r: r["id"]
            ),
            "slices": {oid: dict(info) for oid, info in self.slices.items()},
        }
        return json.dumps(state, sort_keys=True)

    # --- replay -------------------------------------------------------------

    def _apply(self, event: PipelineEvent):
        """Interpret one journaled event against the state maps. Used only
        when rebuilding from the log; the payloads carry everything."""
        oid = event.order_id
        payload = event.payload
        if event.stage is Stage.ORDERED:
            self.orders[oid] = ServiceOrder.from_dict(payload["order"])
            number = int(oid.rsplit("-", 1)[1])
            self._order_seq = max(self._order_seq, number)
            return
        order = self.orders[oid]
        order.status = OrderStatus(payload["status"])
        if event.stage is Stage.DESIGNED:
            if "design" in payload:
                self.designs[oid] = NslDesign.from_dict(payload["design"])
        elif event.stage is Stage.ADMITTED:
            verdict = payload["verdict"]
            self.solutions[oid] = FeasibleSolution.from_dict(verdict["solution"])
        elif event.stage is Stage.REJECTED:
            order.rejection_cause = payload["rejection_cause"]
        elif event.stage is Stage.RESERVED:
            booked = [Reservation.from_dict(r) for r in payload["reservations"]]
            self.infra.reservations.extend(booked)
            self.solutions[oid] = FeasibleSolution.from_dict(payload["solution"])
            self._bump_rsv_seq(booked)
        elif event.stage is Stage.PREPARED:
            self.descriptors[oid] = NslDescriptor.from_dict(payload["descriptor"])
            self.priorities[oid] = payload["priority"]
            self.slices[oid] = {
                "current_il": self.descriptors[oid].target_il_id,
                "degraded_hours": 0,
            }
        elif event.stage is Stage.ACTIVE:
            self.slices[oid]["current_il"] = payload["current_il"]
        elif event.stage is Stage.SCALED:
            booked = [Reservation.from_dict(r) for r in payload["reservations"]]
            self.infra.reservations[:] = [
                r for r in self.infra.reservations if r.order_id != oid
            ] + booked
            self.slices[oid]["current_il"] = payload["to_il"]
            self._bump_rsv_seq(booked)
        elif event.stage is Stage.DEGRADED:
            self.slices[oid]["degraded_hours"] = self.slices[oid].get("degraded_hours", 0) + 1
        elif event.stage is Stage.TERMINATED:
            self.infra.reservations[:] = [
                r for r in self.infra.reservations if r.order_id != oid
            ]

    def _bump_rsv_seq(self, booked: list[Reservation]):
        for r in booked:
            head, _, tail = r.id.rpartition("-")
            if head == "rsv" and tail.isdigit():
                self._rsv_seq = max(self._rsv_seq, int(tail))

    @classmethod
    def replay(
        cls,
        cat: Catalog,
        infra: InfrastructureMap,
        config: ProviderConfig,
        log: EventLog,
        tenants: set[str] | None = None,
    ) -> "Orchestrator":
        """Rebuild an orchestrator purely from the journal.

        ``infra`` must carry no reservations of its own; the log is the
        source of truth for bookings.
        """
        if infra.reservations:
            raise SlicekitError("replay needs a reservation-free infrastructure map")
        orch = cls(cat, infra, config, log=log, tenants=tenants)
        for event in log:
            orch._apply(event)
        return orch
