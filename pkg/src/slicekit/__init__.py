"""Catalog-driven network slice creation over a simulated multi-PoP
infrastructure: ordering, design, admission, placement, reservation and
run-time scaling."""

from .admission import AdmissionRequest, AdmissionVerdict, FeasibleSolution, admit
from .catalog import Catalog, load_catalog
from .config import ProviderConfig, load_config
from .design import NslDesign, TrafficProfile, build_design
from .errors import SlicekitError
from .events import EventLog, PipelineEvent, Stage
from .infra import InfrastructureMap, Reservation, abstract_view, load_infrastructure
from .lifecycle import NslDescriptor, SliceRuntime, parse_nsld, step_simulation, to_yaml
from .ordering import OrderStatus, ServiceOrder, submit_order
from .placement import Objective, ObjectiveKind, optimize, reserve
from .resources import PerformanceVector, ResourceVector, TimeWindow
from .service import Orchestrator

__all__ = [
    "AdmissionRequest",
    "AdmissionVerdict",
    "Catalog",
    "EventLog",
    "FeasibleSolution",
    "InfrastructureMap",
    "NslDescriptor",
    "NslDesign",
    "Objective",
    "ObjectiveKind",
    "Orchestrator",
    "OrderStatus",
    "PerformanceVector",
    "PipelineEvent",
    "ProviderConfig",
    "Reservation",
    "ResourceVector",
    "ServiceOrder",
    "SliceRuntime",
    "SlicekitError",
    "Stage",
    "TimeWindow",
    "TrafficProfile",
    "abstract_view",
    "admit",
    "build_design",
    "load_catalog",
    "load_config",
    "load_infrastructure",
    "optimize",
    "parse_nsld",
    "reserve",
    "step_simulation",
    "submit_order",
    "to_yaml",
]
