"""Value types shared across the pipeline: resource vectors, performance
vectors and recurring time windows.

Resource quantities are integers (cores, GiB). Time is expressed in epoch
minutes; windows use half-open [start, end) semantics so that two windows
overlap iff ``a.start < b.end and b.start < a.end``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

MINUTES_PER_DAY = 1440


@dataclass(frozen=True, order=True)
class ResourceVector:
    """Componentwise non-negative (vcpu, mem_gb, storage_gb) triple."""

    vcpu: int
    mem_gb: int
    storage_gb: int

    def __post_init__(self):
        for name in ("vcpu", "mem_gb", "storage_gb"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(
            self.vcpu + other.vcpu,
            self.mem_gb + other.mem_gb,
            self.storage_gb + other.storage_gb,
        )

    def __sub__(self, other: "ResourceVector") -> "ResourceVector":
        # construction re-checks non-negativity, so underflow raises
        return ResourceVector(
            self.vcpu - other.vcpu,
            self.mem_gb - other.mem_gb,
            self.storage_gb - other.storage_gb,
        )

    def scaled(self, count: int) -> "ResourceVector":
        return ResourceVector(self.vcpu * count, self.mem_gb * count, self.storage_gb * count)

    def fits_within(self, other: "ResourceVector") -> bool:
        return (
            self.vcpu <= other.vcpu
            and self.mem_gb <= other.mem_gb
            and self.storage_gb <= other.storage_gb
        )

    def componentwise_min(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(
            min(self.vcpu, other.vcpu),
            min(self.mem_gb, other.mem_gb),
            min(self.storage_gb, other.storage_gb),
        )

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.vcpu, self.mem_gb, self.storage_gb)

    def to_dict(self) -> dict:
        return {"vcpu": self.vcpu, "mem_gb": self.mem_gb, "storage_gb": self.storage_gb}

    @classmethod
    def from_dict(cls, data: dict) -> "ResourceVector":
        return cls(vcpu=data["vcpu"], mem_gb=data["mem_gb"], storage_gb=data["storage_gb"])

    @classmethod
    def zero(cls) -> "ResourceVector":
        return cls(0, 0, 0)


@dataclass(frozen=True)
class PerformanceVector:
    """Declared or required service capacity.

    Throughput and sessions are "more is better"; latency is a bound,
    "less is better". All comparisons below honor that orientation.
    """

    throughput_mbps: float
    max_sessions: float
    max_latency_ms: float

    def __post_init__(self):
        if self.throughput_mbps <= 0:
            raise ValueError(f"throughput_mbps must be > 0, got {self.throughput_mbps}")
        if self.max_sessions <= 0:
            raise ValueError(f"max_sessions must be > 0, got {self.max_sessions}")
        if self.max_latency_ms <= 0:
            raise ValueError(f"max_latency_ms must be > 0, got {self.max_latency_ms}")

    def meets(self, required: "PerformanceVector") -> bool:
        """True if this capacity satisfies ``required`` (latency inverted)."""
        return (
            self.throughput_mbps >= required.throughput_mbps
            and self.max_sessions >= required.max_sessions
            and self.max_latency_ms <= required.max_latency_ms
        )

    def dominates(self, other: "PerformanceVector") -> bool:
        """Componentwise at-least-as-good (latency: at most as high)."""
        return (
            self.throughput_mbps >= other.throughput_mbps
            and self.max_sessions >= other.max_sessions
            and self.max_latency_ms <= other.max_latency_ms
        )

    def scaled(self, fraction: float) -> "PerformanceVector":
        """Volume components scaled by a load fraction; latency is load-invariant."""
        return PerformanceVector(
            throughput_mbps=self.throughput_mbps * fraction,
            max_sessions=self.max_sessions * fraction,
            max_latency_ms=self.max_latency_ms,
        )

    def coverage_fraction(self, required: "PerformanceVector") -> float:
        """Largest load fraction of ``required`` this capacity can carry."""
        return min(
            self.throughput_mbps / required.throughput_mbps,
            self.max_sessions / required.max_sessions,
        )

    def to_dict(self) -> dict:
        return {
            "throughput_mbps": self.throughput_mbps,
            "max_sessions": self.max_sessions,
            "max_latency_ms": self.max_latency_ms,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PerformanceVector":
        return cls(
            throughput_mbps=data["throughput_mbps"],
            max_sessions=data["max_sessions"],
            max_latency_ms=data["max_latency_ms"],
        )


class Recurrence(str, Enum):
    ONCE = "ONCE"
    DAILY = "DAILY"


@dataclass(frozen=True)
class TimeWindow:
    """Half-open activity window in epoch minutes, optionally repeating daily."""

    start: int
    end: int
    recurrence: Recurrence = Recurrence.ONCE

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"window start must precede end: [{self.start}, {self.end})")
        if self.recurrence is Recurrence.DAILY and self.end - self.start >= MINUTES_PER_DAY:
            raise ValueError("DAILY windows must span less than one day")

    def occurrences(self, lo: int, hi: int) -> list[tuple[int, int]]:
        """Concrete [start, end) intervals of this window clipped to [lo, hi).

        A DAILY window exists from its first occurrence onward and repeats
        every 1440 minutes.
        """
        if lo >= hi:
            return []
        if self.recurrence is Recurrence.ONCE:
            s, e = max(self.start, lo), min(self.end, hi)
            return [(s, e)] if s < e else []
        out = []
        # first repetition index whose interval can reach past lo
        k = max(0, -(-(lo - self.end + 1) // MINUTES_PER_DAY))
        while self.start + k * MINUTES_PER_DAY < hi:
            s = max(self.start + k * MINUTES_PER_DAY, lo)
            e = min(self.end + k * MINUTES_PER_DAY, hi)
            if s < e:
                out.append((s, e))
            k += 1
        return out

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "recurrence": self.recurrence.value}

    @classmethod
    def from_dict(cls, data: dict) -> "TimeWindow":
        return cls(
            start=data["start"],
            end=data["end"],
            recurrence=Recurrence(data.get("recurrence", "ONCE")),
        )


def normalize_windows(windows: list[TimeWindow]) -> list[TimeWindow]:
    """Sort windows by start and reject overlapping pairs.

    Overlap is checked on the plain [start, end) spans for ONCE windows and
    on the daily pattern for DAILY ones; mixing recurrences is allowed as
    long as the concrete occurrences never collide on the first repetition.
    """
    ordered = sorted(windows, key=lambda w: (w.start, w.end))
    for a, b in zip(ordered, ordered[1:]):
        horizon = max(a.end, b.end) + MINUTES_PER_DAY
        occ_a = a.occurrences(min(a.start, b.start), horizon)
        occ_b = b.occurrences(min(a.start, b.start), horizon)
        for sa, ea in occ_a:
            for sb, eb in occ_b:
                if sa < eb and sb < ea:
                    raise ValueError(f"overlapping windows: {a} and {b}")
    return ordered
