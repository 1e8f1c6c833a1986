"""Service ordering: template customization, validation, order lifecycle.

An order is a template reference plus tenant overrides on the attributes
the provider marked customizable. Re-negotiation never mutates a rejected
order; it clones it into a fresh SUBMITTED one, preserving lineage.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum

from .catalog import Catalog, ServiceTemplate
from .errors import ForbiddenAttribute, IllegalTransition, OutOfRange
from .resources import PerformanceVector, TimeWindow


class OrderStatus(str, Enum):
    SUBMITTED = "SUBMITTED"
    DESIGNED = "DESIGNED"
    ADMITTED = "ADMITTED"
    REJECTED = "REJECTED"
    RESERVED = "RESERVED"
    PREPARED = "PREPARED"
    ACTIVE = "ACTIVE"
    TERMINATED = "TERMINATED"


# ADMITTED -> DESIGNED covers the capacity-raced commit, which sends the
# order back for re-admission. REJECTED and TERMINATED are terminal.
SUCCESSORS: dict[OrderStatus, frozenset[OrderStatus]] = {
    OrderStatus.SUBMITTED: frozenset({OrderStatus.DESIGNED, OrderStatus.REJECTED}),
    OrderStatus.DESIGNED: frozenset({OrderStatus.ADMITTED, OrderStatus.REJECTED}),
    OrderStatus.ADMITTED: frozenset({OrderStatus.RESERVED, OrderStatus.DESIGNED}),
    OrderStatus.RESERVED: frozenset({OrderStatus.PREPARED}),
    OrderStatus.PREPARED: frozenset({OrderStatus.ACTIVE, OrderStatus.TERMINATED}),
    OrderStatus.ACTIVE: frozenset({OrderStatus.TERMINATED}),
    OrderStatus.REJECTED: frozenset(),
    OrderStatus.TERMINATED: frozenset(),
}


@dataclass
class ServiceOrder:
    id: str
    tenant_id: str
    template_id: str
    attribute_overrides: dict[str, object]
    status: OrderStatus = OrderStatus.SUBMITTED
    created_at: float = 0.0
    parent_order_id: str | None = None
    rejection_cause: str | None = None

    def transition(self, target: OrderStatus):
        if target not in SUCCESSORS[self.status]:
            raise IllegalTransition(self.status.value, target.value)
        self.status = target

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "tenant_id": self.tenant_id,
            "template_id": self.template_id,
            "attribute_overrides": dict(self.attribute_overrides),
            "status": self.status.value,
            "created_at": self.created_at,
            "parent_order_id": self.parent_order_id,
            "rejection_cause": self.rejection_cause,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ServiceOrder":
        return cls(
            id=data["id"],
            tenant_id=data["tenant_id"],
            template_id=data["template_id"],
            attribute_overrides=dict(data["attribute_overrides"]),
            status=OrderStatus(data["status"]),
            created_at=data["created_at"],
            parent_order_id=data.get("parent_order_id"),
            rejection_cause=data.get("rejection_cause"),
        )


@dataclass(frozen=True)
class EffectiveRequirements:
    """Template requirements with the tenant's overrides applied."""

    topology: tuple[str, ...]
    performance: PerformanceVector
    functional: frozenset[str]
    temporal_reqs: tuple[TimeWindow, ...]
    geo_reqs: dict[str, frozenset[str]]
    visible_metrics: frozenset[str]
    allowed_actions: frozenset[str]


def validate_overrides(template: ServiceTemplate, overrides: dict[str, object]):
    """Reject overrides outside provider policy: unknown paths or values
    outside the advertised envelope."""
    for path, value in overrides.items():
        allowed = template.customizable.get(path)
        if allowed is None:
            raise ForbiddenAttribute(path)
        if not allowed.contains(value):
            raise OutOfRange(path, value, allowed.describe())


def submit_order(
    cat: Catalog,
    order_id: str,
    tenant_id: str,
    template_id: str,
    overrides: dict[str, object],
    created_at: float,
    parent_order_id: str | None = None,
) -> ServiceOrder:
    template = cat.template(template_id)
    validate_overrides(template, overrides)
    return ServiceOrder(
        id=order_id,
        tenant_id=tenant_id,
        template_id=template_id,
        attribute_overrides=dict(overrides),
        status=OrderStatus.SUBMITTED,
        created_at=created_at,
        parent_order_id=parent_order_id,
    )


def overlay(base: dict, overrides: dict[str, object]) -> dict:
    """Apply dotted-path overrides onto a nested dict, pure and idempotent."""
    result = copy.deepcopy(base)
    for path, value in overrides.items():
        node = result
        parts = path.split(".")
        for part in parts[:-1]:
            node = node[part]
        node[parts[-1]] = value
    return result


def effective_requirements(cat: Catalog, order: ServiceOrder) -> EffectiveRequirements:
    """Deterministic overlay of the order's overrides on its template."""
    template = cat.template(order.template_id)
    merged = overlay(template.requirements_dict(), order.attribute_overrides)
    net = merged["network_reqs"]
    return EffectiveRequirements(
        topology=tuple(merged["topology"]),
        performance=PerformanceVector.from_dict(net["performance"]),
        functional=frozenset(net["functional"]),
        temporal_reqs=tuple(TimeWindow.from_dict(w) for w in merged["temporal_reqs"]),
        geo_reqs={tag: frozenset(r) for tag, r in merged["geo_reqs"].items()},
        visible_metrics=frozenset(merged["operational_reqs"]["visible_metrics"]),
        allowed_actions=frozenset(merged["operational_reqs"]["allowed_actions"]),
    )
