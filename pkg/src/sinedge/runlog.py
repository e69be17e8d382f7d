"""Run log: the complete, replayable event record of one simulation run.

Serialized as line-delimited JSON, one record per line, keys in a fixed
order per record kind.  Two runs of the same scenario with the same seed
produce byte-identical logs; the test suite holds that to zero tolerance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from .domain import (
    ActuatorId,
    GreenhouseId,
    ValveAction,
)

TIME_DECIMALS = 6


def _t(t: float) -> float:
    return round(t, TIME_DECIMALS)


def rec_start(seed: int, scenario_digest: str) -> dict[str, Any]:
    return {"t": 0.0, "kind": "start", "seed": seed, "scenario": scenario_digest}


def rec_sample_emitted(t: float, mote: int, greenhouse: str, moisture: float) -> dict[str, Any]:
    return {"t": _t(t), "kind": "sample_emitted", "mote": mote,
            "greenhouse": greenhouse, "moisture": moisture}


def rec_sample_delivered(t: float, mote: int, greenhouse: str, moisture: float,
                         sampled_at: float) -> dict[str, Any]:
    return {"t": _t(t), "kind": "sample_delivered", "mote": mote,
            "greenhouse": greenhouse, "moisture": moisture, "sampled_at": _t(sampled_at)}


def rec_drop(t: float, msg: str, hop: int, entity: int, greenhouse: str) -> dict[str, Any]:
    return {"t": _t(t), "kind": "drop", "msg": msg, "hop": hop,
            "entity": entity, "greenhouse": greenhouse}


def rec_command(t: float, greenhouse: str, actuator: int, action: str,
                origin: str) -> dict[str, Any]:
    return {"t": _t(t), "kind": "command", "greenhouse": greenhouse,
            "actuator": actuator, "action": action, "origin": origin}


def rec_valve(t: float, actuator: int, greenhouse: str, action: str,
              applied: bool) -> dict[str, Any]:
    return {"t": _t(t), "kind": "valve", "actuator": actuator,
            "greenhouse": greenhouse, "action": action, "applied": applied}


def rec_physics(t: float, greenhouse: str, moisture: float, valve_open: bool) -> dict[str, Any]:
    return {"t": _t(t), "kind": "physics", "greenhouse": greenhouse,
            "moisture": round(moisture, TIME_DECIMALS), "valve": valve_open}


def rec_end(t: float, moisture: dict[str, float], open_seconds: dict[str, float]) -> dict[str, Any]:
    return {"t": _t(t), "kind": "end",
            "moisture": {k: round(v, TIME_DECIMALS) for k, v in moisture.items()},
            "open_seconds": {k: round(v, TIME_DECIMALS) for k, v in open_seconds.items()}}


@dataclass
class RunLog:
    """Ordered event records plus convenience filters over them."""

    records: list[dict[str, Any]] = field(default_factory=list)

    def append(self, record: dict[str, Any]) -> None:
        self.records.append(record)

    def of_kind(self, *kinds: str, greenhouse: Optional[GreenhouseId] = None) -> list[dict[str, Any]]:
        out = [r for r in self.records if r["kind"] in kinds]
        if greenhouse is not None:
            out = [r for r in out if r.get("greenhouse") == greenhouse]
        return out

    def valve_transitions(self, greenhouse: Optional[GreenhouseId] = None) -> list[dict[str, Any]]:
        """Valve records that actually changed the physical state."""
        return [r for r in self.of_kind("valve", greenhouse=greenhouse) if r["applied"]]

    def open_intervals(self, greenhouse: GreenhouseId, end: float) -> list[tuple[float, float]]:
        """(open_at, close_at) pairs for the greenhouse's valve; the valve
        starts closed and a trailing open interval is cut off at `end`."""
        intervals: list[tuple[float, float]] = []
        opened_at: Optional[float] = None
        for r in self.valve_transitions(greenhouse):
            if r["action"] == ValveAction.OPEN.value and opened_at is None:
                opened_at = r["t"]
            elif r["action"] == ValveAction.CLOSE.value and opened_at is not None:
                intervals.append((opened_at, r["t"]))
                opened_at = None
        if opened_at is not None:
            intervals.append((opened_at, max(opened_at, end)))
        return intervals

    def message_counts(self, msg: str) -> dict[str, int]:
        """Emitted/delivered/dropped tallies for one message class."""
        if msg == "sample":
            emitted = len(self.of_kind("sample_emitted"))
            delivered = len(self.of_kind("sample_delivered"))
        elif msg == "command":
            emitted = len(self.of_kind("command"))
            delivered = len(self.of_kind("valve"))
        else:
            raise ValueError(f"unknown message class {msg!r}")
        dropped = len([r for r in self.of_kind("drop") if r["msg"] == msg])
        return {"emitted": emitted, "delivered": delivered, "dropped": dropped}

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in self.records)

    def write_jsonl(self, path: Any) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "RunLog":
        return cls(records=[json.loads(line) for line in text.splitlines() if line.strip()])

    @classmethod
    def read_jsonl(cls, path: Any) -> "RunLog":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_jsonl(fh.read())
