"""Provider configuration: policy knobs, objective, file locations.

Everything the provider can tune without touching code lives here; the
defaults match the documented policy (overbooking 1.5, 10% scale-down
hysteresis, resource-minimizing placement).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ParseError
from .infra import ReservationMode
from .placement import Objective, ObjectiveKind
from .resources import ResourceVector


@dataclass
class ProviderConfig:
    beta: float = 1.5
    hysteresis: float = 0.10
    sustain_minutes: int = 0
    objective: str = "MIN_RESOURCE"
    weights: tuple[int, int, int] = (1, 1, 1)
    preferred_pops: frozenset[str] = frozenset()
    priority_table: dict[str, int] = field(default_factory=dict)
    default_priority: int = 4
    reservation_mode: str = "HARD"
    max_optional_ils: int = 6
    wan_max_hops: int = 4
    extra_capabilities: frozenset[str] = frozenset()
    reporting_period_s: int = 60
    port: int = 8080
    data_dir: Path = Path("data")
    catalog_dir: Path | None = None
    infra_file: Path | None = None
    tenants_file: Path | None = None
    profiles_dir: Path | None = None

    def __post_init__(self):
        if self.beta < 1.0:
            raise ValueError("beta must be >= 1.0 (no underbooking)")
        if not 0.0 <= self.hysteresis < 1.0:
            raise ValueError("hysteresis must be in [0, 1)")
        if self.sustain_minutes < 0:
            raise ValueError("sustain_minutes must be >= 0")
        ObjectiveKind(self.objective)
        ReservationMode(self.reservation_mode)
        if self.max_optional_ils < 0:
            raise ValueError("max_optional_ils must be >= 0")
        if self.wan_max_hops < 1:
            raise ValueError("wan_max_hops must be >= 1")
        for template_id, prio in self.priority_table.items():
            if not 0 <= prio <= 9:
                raise ValueError(f"priority for {template_id} outside 0..9")
        if not 0 <= self.default_priority <= 9:
            raise ValueError("default_priority outside 0..9")

    def objective_spec(self) -> Objective:
        return Objective(kind=ObjectiveKind(self.objective), weights=ResourceVector(*self.weights))

    def mode(self) -> ReservationMode:
        return ReservationMode(self.reservation_mode)


_PATH_KEYS = ("data_dir", "catalog_dir", "infra_file", "tenants_file", "profiles_dir")


def load_config(path: str | Path | None = None, env: dict | None = None) -> ProviderConfig:
    """Defaults, overlaid by the YAML file, overlaid by env vars
    (SLICEKIT_PORT, SLICEKIT_DATA_DIR)."""
    env = os.environ if env is None else env
    raw: dict = {}
    base: Path | None = None
    if path is not None:
        path = Path(path)
        base = path.parent
        try:
            loaded = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ParseError(f"{path}: {exc}") from exc
        if loaded is not None:
            if not isinstance(loaded, dict):
                raise ParseError(f"{path}: config must be a mapping")
            raw = loaded

    kwargs: dict = {}
    for key in (
        "beta",
        "hysteresis",
        "sustain_minutes",
        "objective",
        "default_priority",
        "reservation_mode",
        "max_optional_ils",
        "wan_max_hops",
        "reporting_period_s",
        "port",
    ):
        if key in raw:
            kwargs[key] = raw[key]
    if "weights" in raw:
        w = raw["weights"]
        kwargs["weights"] = (int(w["vcpu"]), int(w["mem_gb"]), int(w["storage_gb"]))
    if "preferred_pops" in raw:
        kwargs["preferred_pops"] = frozenset(raw["preferred_pops"])
    if "priority_table" in raw:
        kwargs["priority_table"] = dict(raw["priority_table"])
    if "extra_capabilities" in raw:
        kwargs["extra_capabilities"] = frozenset(raw["extra_capabilities"])
    for key in _PATH_KEYS:
        if key in raw:
            value = Path(raw[key])
            # relative paths resolve against the config file location
            if base is not None and not value.is_absolute():
                value = base / value
            kwargs[key] = value

    if "SLICEKIT_PORT" in env:
        kwargs["port"] = int(env["SLICEKIT_PORT"])
    if "SLICEKIT_DATA_DIR" in env:
        kwargs["data_dir"] = Path(env["SLICEKIT_DATA_DIR"])

    try:
        return ProviderConfig(**kwargs)
    except ValueError as exc:
        raise ParseError(f"config: {exc}") from exc
