"""Append-only pipeline event log.

One JSON record per line; the log is the system of record and replaying
it must rebuild the same state the live process holds (verified by the
snapshot-equality tests).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path


class Stage(str, Enum):
    ORDERED = "ORDERED"
    DESIGNED = "DESIGNED"
    ADMITTED = "ADMITTED"
    REJECTED = "REJECTED"
    RESERVED = "RESERVED"
    PREPARED = "PREPARED"
    ACTIVE = "ACTIVE"
    SCALED = "SCALED"
    DEGRADED = "DEGRADED"
    TERMINATED = "TERMINATED"


@dataclass(frozen=True)
class PipelineEvent:
    seq: int
    order_id: str
    stage: Stage
    payload: dict
    at: float

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "order_id": self.order_id,
            "stage": self.stage.value,
            "payload": self.payload,
            "at": self.at,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineEvent":
        return cls(
            seq=data["seq"],
            order_id=data["order_id"],
            stage=Stage(data["stage"]),
            payload=data["payload"],
            at=data["at"],
        )


class EventLog:
    """Strictly ordered event journal, optionally file-backed."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.events: list[PipelineEvent] = []
        if self.path is not None and self.path.exists():
            for line in self.path.read_text().splitlines():
                if not line.strip():
                    continue
                event = PipelineEvent.from_dict(json.loads(line))
                self._check_seq(event)
                self.events.append(event)

    def _check_seq(self, event: PipelineEvent):
        last = self.events[-1].seq if self.events else 0
        if event.seq <= last:
            raise ValueError(f"event seq {event.seq} not after {last}")

    @property
    def next_seq(self) -> int:
        return (self.events[-1].seq if self.events else 0) + 1

    def append(self, order_id: str, stage: Stage, payload: dict, at: float | None = None) -> PipelineEvent:
        event = PipelineEvent(
            seq=self.next_seq,
            order_id=order_id,
            stage=stage,
            payload=payload,
            at=time.time() if at is None else at,
        )
        self.events.append(event)
        if self.path is not None:
            with open(self.path, "a") as handle:
                handle.write(event.to_json() + "\n")
        return event

    def for_order(self, order_id: str) -> list[PipelineEvent]:
        return [e for e in self.events if e.order_id == order_id]

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)
