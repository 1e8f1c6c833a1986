"""Service and network-service catalogs.

Holds VNF descriptors, NS descriptors (flavors + instantiation levels),
service templates, and the triplet resolution that turns a
(descriptor, flavor, level) address into a flat, placeable deployment
plan. The catalog is immutable after load and safe to share.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources as importlib_resources
from pathlib import Path

import jsonschema
import yaml

from .errors import CyclicNesting, DanglingRef, NestedTripletMissing, ParseError, UnknownTemplate
from .resources import PerformanceVector, ResourceVector, TimeWindow, normalize_windows


class AffinityKind(str, Enum):
    SAME_POP = "SAME_POP"
    DIFFERENT_POP = "DIFFERENT_POP"


@dataclass(frozen=True)
class AffinityRule:
    """Binary co-location constraint between two VNF instance groups.

    ``peer`` may equal the owning VNF: DIFFERENT_POP against itself spreads
    the group's instances over distinct PoPs.
    """

    kind: AffinityKind
    peer: str


@dataclass(frozen=True)
class ReliabilityReq:
    """Forward-looking reliability extension, stored beside the standard
    instantiation-level fields rather than inside them."""

    backup_count: int = 0
    requires_ha_pop: bool = False

    def __post_init__(self):
        if self.backup_count < 0:
            raise ValueError("backup_count must be >= 0")


@dataclass(frozen=True)
class ConfigPrimitive:
    name: str
    params: tuple[str, ...] = ()


@dataclass(frozen=True)
class VnfDescriptor:
    id: str
    function_tag: str
    resource_levels: dict[str, ResourceVector]
    config_primitives: tuple[ConfigPrimitive, ...] = ()

    def __post_init__(self):
        if not self.function_tag:
            raise ValueError(f"VNF {self.id}: function_tag must be non-empty")
        if not self.resource_levels:
            raise ValueError(f"VNF {self.id}: at least one resource level required")


@dataclass(frozen=True)
class VirtualLinkTemplate:
    id: str
    endpoints: tuple[str, str]


@dataclass(frozen=True)
class VnfPlan:
    instance_count: int
    resource_level: str
    affinity_rules: tuple[AffinityRule, ...] = ()
    reliability: ReliabilityReq = ReliabilityReq()

    def __post_init__(self):
        if self.instance_count < 1:
            raise ValueError("instance_count must be >= 1")
        if self.reliability.backup_count >= self.instance_count:
            raise ValueError("backup_count must be smaller than instance_count")


@dataclass(frozen=True)
class LinkPlan:
    bitrate_mbps: int
    reliability_class: int

    def __post_init__(self):
        if self.bitrate_mbps < 0:
            raise ValueError("bitrate_mbps must be >= 0")
        if not 1 <= self.reliability_class <= 3:
            raise ValueError("reliability_class must be in 1..3")


@dataclass(frozen=True)
class NsInstantiationLevel:
    """One sizing option of a flavor: per-VNF instance plans, per-link
    bitrate plans, the capacity this level declares, and (for composite
    NSs) the triplet to use for each nested NS."""

    id: str
    vnf_plans: dict[str, VnfPlan]
    link_plans: dict[str, LinkPlan]
    declared_capacity: PerformanceVector
    nested_triplets: dict[str, tuple[str, str]] = field(default_factory=dict)


@dataclass(frozen=True)
class NsFlavor:
    id: str
    active_vnfs: frozenset[str]
    active_links: frozenset[str]
    feature_tags: frozenset[str]
    instantiation_levels: tuple[NsInstantiationLevel, ...]

    def __post_init__(self):
        if not self.active_vnfs:
            raise ValueError(f"flavor {self.id}: active_vnfs must be non-empty")
        if not self.instantiation_levels:
            raise ValueError(f"flavor {self.id}: at least one instantiation level required")

    def level(self, il_id: str) -> NsInstantiationLevel:
        for il in self.instantiation_levels:
            if il.id == il_id:
                return il
        raise DanglingRef(f"instantiation level {il_id} not in flavor {self.id}")


@dataclass(frozen=True)
class NsDescriptor:
    id: str
    vnf_refs: tuple[str, ...]
    nested_ns_refs: tuple[str, ...]
    virtual_links: tuple[VirtualLinkTemplate, ...]
    flavors: tuple[NsFlavor, ...]

    def flavor(self, flavor_id: str) -> NsFlavor:
        for fl in self.flavors:
            if fl.id == flavor_id:
                return fl
        raise DanglingRef(f"flavor {flavor_id} not in NS descriptor {self.id}")


@dataclass(frozen=True)
class Triplet:
    """Complete resource-centric address of one NS deployment option."""

    nsd_id: str
    flavor_id: str
    il_id: str

    def to_dict(self) -> dict:
        return {"nsd_id": self.nsd_id, "flavor_id": self.flavor_id, "il_id": self.il_id}

    @classmethod
    def from_dict(cls, data: dict) -> "Triplet":
        return cls(data["nsd_id"], data["flavor_id"], data["il_id"])


@dataclass(frozen=True)
class NslInstantiationLevel:
    """One deployment size of a whole slice: ordered triplet references,
    one per constituent NS instance."""

    id: str
    triplets: tuple[Triplet, ...]

    def __post_init__(self):
        if not self.triplets:
            raise ValueError("slice instantiation level needs at least one triplet")

    def to_dict(self) -> dict:
        return {"id": self.id, "triplets": [t.to_dict() for t in self.triplets]}

    @classmethod
    def from_dict(cls, data: dict) -> "NslInstantiationLevel":
        return cls(data["id"], tuple(Triplet.from_dict(t) for t in data["triplets"]))


@dataclass(frozen=True)
class AllowedValues:
    """Customization envelope for one template attribute: a numeric
    [min, max] range or an explicit choice list."""

    min: float | None = None
    max: float | None = None
    choices: tuple | None = None

    def __post_init__(self):
        if self.choices is not None:
            if not self.choices:
                raise ValueError("choices must be non-empty")
        elif self.min is None or self.max is None:
            raise ValueError("range needs both min and max")
        elif self.min > self.max:
            raise ValueError(f"empty range [{self.min}, {self.max}]")

    def contains(self, value) -> bool:
        if self.choices is not None:
            return value in self.choices
        return isinstance(value, (int, float)) and not isinstance(value, bool) and self.min <= value <= self.max

    def describe(self) -> str:
        if self.choices is not None:
            return f"one of {list(self.choices)}"
        return f"[{self.min}, {self.max}]"

    def to_dict(self) -> dict:
        if self.choices is not None:
            return {"choices": list(self.choices)}
        return {"min": self.min, "max": self.max}


@dataclass(frozen=True)
class ServiceTemplate:
    """Business-facing offer: what the slice looks like and which of its
    attributes a tenant may customize, within provider-set envelopes."""

    id: str
    topology: tuple[str, ...]
    performance: PerformanceVector
    functional: frozenset[str]
    temporal_reqs: tuple[TimeWindow, ...]
    geo_reqs: dict[str, frozenset[str]]
    visible_metrics: frozenset[str]
    allowed_actions: frozenset[str]
    customizable: dict[str, AllowedValues]

    def __post_init__(self):
        if not self.topology:
            raise ValueError(f"template {self.id}: topology must be non-empty")
        for tag in self.geo_reqs:
            if tag not in self.topology:
                raise ValueError(f"template {self.id}: geo requirement for unknown node {tag}")

    def requirements_dict(self) -> dict:
        """Plain nested dict of the requirement sections, the base the
        tenant overrides are overlaid on."""
        return {
            "topology": list(self.topology),
            "network_reqs": {
                "performance": self.performance.to_dict(),
                "functional": sorted(self.functional),
            },
            "temporal_reqs": [w.to_dict() for w in self.temporal_reqs],
            "geo_reqs": {tag: sorted(regions) for tag, regions in self.geo_reqs.items()},
            "operational_reqs": {
                "visible_metrics": sorted(self.visible_metrics),
                "allowed_actions": sorted(self.allowed_actions),
            },
        }


@dataclass(frozen=True)
class VnfDemand:
    """Flattened per-VNF deployment requirement of a resolved triplet.

    ``unit`` is the path-qualified identity ("nsd/.../nsd:vnf"), unique
    across the whole expansion even when descriptors are reused.
    """

    unit: str
    vnf_ref: str
    function_tag: str
    instance_count: int
    per_instance: ResourceVector
    affinity_rules: tuple[AffinityRule, ...]
    reliability: ReliabilityReq

    @property
    def total(self) -> ResourceVector:
        return self.per_instance.scaled(self.instance_count)


@dataclass(frozen=True)
class LinkDemand:
    unit: str
    link_ref: str
    bitrate_mbps: int
    reliability_class: int
    endpoint_units: tuple[str, str]


@dataclass(frozen=True)
class ResolvedDeployment:
    """Flat deployment plan for one triplet, nested NSs expanded."""

    triplet: Triplet
    vnf_entries: tuple[VnfDemand, ...]
    link_entries: tuple[LinkDemand, ...]

    @property
    def total_resources(self) -> ResourceVector:
        total = ResourceVector.zero()
        for entry in self.vnf_entries:
            total = total + entry.total
        return total


@dataclass
class Catalog:
    vnfs: dict[str, VnfDescriptor]
    nsds: dict[str, NsDescriptor]
    templates: dict[str, ServiceTemplate]

    def vnf(self, vnf_id: str) -> VnfDescriptor:
        if vnf_id not in self.vnfs:
            raise DanglingRef(f"unknown VNF descriptor {vnf_id}")
        return self.vnfs[vnf_id]

    def nsd(self, nsd_id: str) -> NsDescriptor:
        if nsd_id not in self.nsds:
            raise DanglingRef(f"unknown NS descriptor {nsd_id}")
        return self.nsds[nsd_id]

    def template(self, template_id: str) -> ServiceTemplate:
        if template_id not in self.templates:
            raise UnknownTemplate(template_id)
        return self.templates[template_id]

    def function_tag_chain(self, nsd_id: str) -> list[str]:
        """Flattened, ordered function tags of an NS descriptor: own VNFs
        first, then nested descriptors depth-first in declaration order."""
        nsd = self.nsd(nsd_id)
        tags = [self.vnf(ref).function_tag for ref in nsd.vnf_refs]
        for nested in nsd.nested_ns_refs:
            tags.extend(self.function_tag_chain(nested))
        return tags


def _schema(name: str) -> dict:
    ref = importlib_resources.files("slicekit.schemas").joinpath(name)
    return json.loads(ref.read_text())


def _read_yaml(path: Path, schema_name: str) -> dict:
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if raw is None:
        raw = {}
    try:
        jsonschema.validate(raw, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path)
        raise ParseError(f"{path}: {exc.message} (at {where})") from exc
    return raw


def _build_vnf(entry: dict) -> VnfDescriptor:
    return VnfDescriptor(
        id=entry["id"],
        function_tag=entry["function_tag"],
        resource_levels={
            name: ResourceVector.from_dict(vec) for name, vec in entry["resource_levels"].items()
        },
        config_primitives=tuple(
            ConfigPrimitive(p["name"], tuple(p.get("params", [])))
            for p in entry.get("config_primitives", [])
        ),
    )


def _build_nsd(entry: dict) -> NsDescriptor:
    flavors = []
    for fl in entry["flavors"]:
        levels = []
        for il in fl["instantiation_levels"]:
            reliability = {
                ref: ReliabilityReq(
                    backup_count=rel["backup_count"],
                    requires_ha_pop=rel.get("requires_ha_pop", False),
                )
                for ref, rel in il.get("reliability_extensions", {}).items()
            }
            plans = {}
            for ref, plan in il["vnf_plans"].items():
                plans[ref] = VnfPlan(
                    instance_count=plan["instance_count"],
                    resource_level=plan["resource_level"],
                    affinity_rules=tuple(
                        AffinityRule(AffinityKind(r["kind"]), r["peer"])
                        for r in plan.get("affinity_rules", [])
                    ),
                    reliability=reliability.get(ref, ReliabilityReq()),
                )
            levels.append(
                NsInstantiationLevel(
                    id=il["id"],
                    vnf_plans=plans,
                    link_plans={
                        ref: LinkPlan(lp["bitrate_mbps"], lp["reliability_class"])
                        for ref, lp in il.get("link_plans", {}).items()
                    },
                    declared_capacity=PerformanceVector.from_dict(il["declared_capacity"]),
                    nested_triplets={
                        nsd: (choice["flavor_id"], choice["il_id"])
                        for nsd, choice in il.get("nested_triplets", {}).items()
                    },
                )
            )
        flavors.append(
            NsFlavor(
                id=fl["id"],
                active_vnfs=frozenset(fl["active_vnfs"]),
                active_links=frozenset(fl.get("active_links", [])),
                feature_tags=frozenset(fl.get("feature_tags", [])),
                instantiation_levels=tuple(levels),
            )
        )
    return NsDescriptor(
        id=entry["id"],
        vnf_refs=tuple(entry.get("vnf_refs", [])),
        nested_ns_refs=tuple(entry.get("nested_ns_refs", [])),
        virtual_links=tuple(
            VirtualLinkTemplate(vl["id"], (vl["endpoints"][0], vl["endpoints"][1]))
            for vl in entry.get("virtual_links", [])
        ),
        flavors=tuple(flavors),
    )


def _build_template(entry: dict) -> ServiceTemplate:
    net = entry["network_reqs"]
    windows = normalize_windows([TimeWindow.from_dict(w) for w in entry["temporal_reqs"]])
    ops = entry["operational_reqs"]
    customizable = {}
    for path, allowed in entry.get("customizable", {}).items():
        if "choices" in allowed:
            customizable[path] = AllowedValues(choices=tuple(allowed["choices"]))
        else:
            customizable[path] = AllowedValues(min=allowed["min"], max=allowed["max"])
    return ServiceTemplate(
        id=entry["id"],
        topology=tuple(entry["topology"]),
        performance=PerformanceVector.from_dict(net["performance"]),
        functional=frozenset(net.get("functional", [])),
        temporal_reqs=tuple(windows),
        geo_reqs={tag: frozenset(regions) for tag, regions in entry.get("geo_reqs", {}).items()},
        visible_metrics=frozenset(ops["visible_metrics"]),
        allowed_actions=frozenset(ops["allowed_actions"]),
        customizable=customizable,
    )


def _check_nesting_acyclic(nsds: dict[str, NsDescriptor]):
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {nsd_id: WHITE for nsd_id in nsds}

    def visit(nsd_id: str, chain: list[str]):
        color[nsd_id] = GRAY
        for nested in nsds[nsd_id].nested_ns_refs:
            if nested not in nsds:
                raise DanglingRef(f"NS descriptor {nsd_id} nests unknown {nested}")
            if color[nested] == GRAY:
                cycle = " -> ".join(chain + [nsd_id, nested])
                raise CyclicNesting(f"nested NS cycle: {cycle}")
            if color[nested] == WHITE:
                visit(nested, chain + [nsd_id])
        color[nsd_id] = BLACK

    for nsd_id in nsds:
        if color[nsd_id] == WHITE:
            visit(nsd_id, [])


def _cross_validate(cat: Catalog):
    for nsd in cat.nsds.values():
        declared_links = {vl.id for vl in nsd.virtual_links}
        for ref in nsd.vnf_refs:
            cat.vnf(ref)
        for vl in nsd.virtual_links:
            for ep in vl.endpoints:
                if ep not in nsd.vnf_refs:
                    raise DanglingRef(f"link {vl.id} in {nsd.id}: endpoint {ep} not a declared VNF")
        for flavor in nsd.flavors:
            stray_vnfs = flavor.active_vnfs - set(nsd.vnf_refs)
            if stray_vnfs:
                raise DanglingRef(f"flavor {flavor.id} of {nsd.id}: undeclared VNFs {sorted(stray_vnfs)}")
            stray_links = flavor.active_links - declared_links
            if stray_links:
                raise DanglingRef(f"flavor {flavor.id} of {nsd.id}: undeclared links {sorted(stray_links)}")
            for il in flavor.instantiation_levels:
                bad_plans = set(il.vnf_plans) - flavor.active_vnfs
                if bad_plans:
                    raise ParseError(
                        f"{nsd.id}/{flavor.id}/{il.id}: plans for inactive VNFs {sorted(bad_plans)}"
                    )
                bad_links = set(il.link_plans) - flavor.active_links
                if bad_links:
                    raise ParseError(
                        f"{nsd.id}/{flavor.id}/{il.id}: plans for inactive links {sorted(bad_links)}"
                    )
                for ref, plan in il.vnf_plans.items():
                    vnf = cat.vnf(ref)
                    if plan.resource_level not in vnf.resource_levels:
                        raise DanglingRef(
                            f"{nsd.id}/{flavor.id}/{il.id}: VNF {ref} has no level {plan.resource_level}"
                        )
                    for rule in plan.affinity_rules:
                        if rule.peer not in nsd.vnf_refs:
                            raise DanglingRef(
                                f"{nsd.id}/{flavor.id}/{il.id}: affinity peer {rule.peer} undeclared"
                            )
                for nested_id in il.nested_triplets:
                    if nested_id not in nsd.nested_ns_refs:
                        raise DanglingRef(
                            f"{nsd.id}/{flavor.id}/{il.id}: nested triplet for non-nested {nested_id}"
                        )


def load_catalog(source: str | Path) -> Catalog:
    """Load and cross-validate the catalog file set.

    ``source`` is a directory containing ``vnfs.*``, ``nsds.*`` and
    ``templates.*`` (YAML). Missing files are treated as empty sections.
    """
    source = Path(source)

    def find(stem: str) -> Path | None:
        for suffix in (".yaml", ".yml"):
            candidate = source / f"{stem}{suffix}"
            if candidate.exists():
                return candidate
        return None

    vnf_path, nsd_path, tpl_path = find("vnfs"), find("nsds"), find("templates")
    vnf_raw = _read_yaml(vnf_path, "vnfs.schema.json") if vnf_path else {}
    nsd_raw = _read_yaml(nsd_path, "nsds.schema.json") if nsd_path else {}
    tpl_raw = _read_yaml(tpl_path, "templates.schema.json") if tpl_path else {}

    try:
        vnfs = {e["id"]: _build_vnf(e) for e in vnf_raw.get("vnfs", [])}
        nsds = {e["id"]: _build_nsd(e) for e in nsd_raw.get("nsds", [])}
        templates = {e["id"]: _build_template(e) for e in tpl_raw.get("templates", [])}
    except ValueError as exc:
        raise ParseError(str(exc)) from exc

    # canonical ordering by id, so load order never matters
    cat = Catalog(
        vnfs=dict(sorted(vnfs.items())),
        nsds=dict(sorted(nsds.items())),
        templates=dict(sorted(templates.items())),
    )
    _check_nesting_acyclic(cat.nsds)
    _cross_validate(cat)
    return cat


def resolve_triplet(cat: Catalog, triplet: Triplet) -> ResolvedDeployment:
    """Expand a triplet into its flat deployment plan.

    Nested NSs are expanded recursively using the triplets their parent
    instantiation level designates; omitting a nested choice is an error.
    """
    vnf_entries: list[VnfDemand] = []
    link_entries: list[LinkDemand] = []

    def expand(t: Triplet, path: tuple[str, ...]):
        nsd = cat.nsd(t.nsd_id)
        flavor = nsd.flavor(t.flavor_id)
        il = flavor.level(t.il_id)
        prefix = "/".join(path + (t.nsd_id,))
        for ref, plan in il.vnf_plans.items():
            vnf = cat.vnf(ref)
            # backups are deployed instances: the trailing backup_count
            # indices of the group, kept off their primaries' PoPs
            vnf_entries.append(
                VnfDemand(
                    unit=f"{prefix}:{ref}",
                    vnf_ref=ref,
                    function_tag=vnf.function_tag,
                    instance_count=plan.instance_count + plan.reliability.backup_count,
                    per_instance=vnf.resource_levels[plan.resource_level],
                    affinity_rules=tuple(
                        AffinityRule(rule.kind, f"{prefix}:{rule.peer}")
                        for rule in plan.affinity_rules
                    ),
                    reliability=plan.reliability,
                )
            )
        links = {vl.id: vl for vl in nsd.virtual_links}
        for ref, plan in il.link_plans.items():
            vl = links[ref]
            link_entries.append(
                LinkDemand(
                    unit=f"{prefix}:{ref}",
                    link_ref=ref,
                    bitrate_mbps=plan.bitrate_mbps,
                    reliability_class=plan.reliability_class,
                    endpoint_units=(f"{prefix}:{vl.endpoints[0]}", f"{prefix}:{vl.endpoints[1]}"),
                )
            )
        for nested_id in nsd.nested_ns_refs:
            if nested_id not in il.nested_triplets:
                raise NestedTripletMissing(
                    f"{t.nsd_id}/{t.flavor_id}/{t.il_id}: no triplet chosen for nested NS {nested_id}"
                )
            nested_flavor, nested_il = il.nested_triplets[nested_id]
            expand(Triplet(nested_id, nested_flavor, nested_il), path + (t.nsd_id,))

    expand(triplet, ())
    return ResolvedDeployment(
        triplet=triplet,
        vnf_entries=tuple(vnf_entries),
        link_entries=tuple(link_entries),
    )
