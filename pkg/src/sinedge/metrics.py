"""Run summaries and strategy comparisons.

Statistics are computed from the true soil trace in the run log (the
physics records), not from noisy sensor samples, so two strategies are
compared on what actually happened in the ground.  A sample-based variant
exists behind a flag for sanity checks against the edge's own store.

Everything is windowed to [warm_up, duration]: the first simulated hours
are a transient of the chosen initial moisture, not of the controller.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Any, Iterable, Optional

from .domain import (
    DEFAULT_BAND,
    GreenhouseId,
    Hysteresis,
    MoistureBand,
    ScenarioConfig,
)
from .runlog import RunLog
from .store import TimeSeriesStore

WARM_UP_DEFAULT = 21600.0   # six simulated hours

SUMMARY_CSV_HEADER = ("greenhouse,mean,stddev,amplitude,time_in_band,"
                      "valve_open_hours,water_liters,commands,drops")

SUMMARY_FIELDS = ("mean", "stddev", "amplitude", "time_in_band",
                  "valve_open_hours", "water_liters", "commands", "drops")


@dataclass(frozen=True)
class RunSummary:
    greenhouse: GreenhouseId
    mean: float
    stddev: float
    amplitude: float
    time_in_band: float
    valve_open_hours: float
    water_liters: float
    commands: int
    drops: int
    warm_up: float
    duration: float

    def to_csv_row(self) -> str:
        return ",".join([
            self.greenhouse,
            f"{self.mean:.6f}",
            f"{self.stddev:.6f}",
            f"{self.amplitude:.6f}",
            f"{self.time_in_band:.6f}",
            f"{self.valve_open_hours:.6f}",
            f"{self.water_liters:.6f}",
            str(self.commands),
            str(self.drops),
        ])

    def to_text(self) -> str:
        lines = [f"greenhouse={self.greenhouse}"]
        for name in SUMMARY_FIELDS:
            value = getattr(self, name)
            lines.append(f"{name}={value:.6f}" if isinstance(value, float) else f"{name}={value}")
        return "\n".join(lines) + "\n"


def _band_for(config: ScenarioConfig, greenhouse: GreenhouseId) -> MoistureBand:
    strat = config.strategies.get(greenhouse)
    if isinstance(strat, Hysteresis):
        return strat.band
    # Timed greenhouses have no band of their own; report them against the
    # default corridor so the comparison is like for like.
    return DEFAULT_BAND


def _series_stats(values: list[float], band: MoistureBand,
                  band_tolerance: float) -> tuple[float, float, float, float]:
    if not values:
        return 0.0, 0.0, 0.0, 0.0
    mean = statistics.fmean(values)
    stddev = statistics.pstdev(values) if len(values) > 1 else 0.0
    amplitude = max(values) - min(values)
    in_band = sum(1 for v in values if band.contains(v, band_tolerance))
    return mean, stddev, amplitude, in_band / len(values)


def clip_intervals(intervals: Iterable[tuple[float, float]],
                   t_from: float, t_to: float) -> list[tuple[float, float]]:
    out = []
    for a, b in intervals:
        a2, b2 = max(a, t_from), min(b, t_to)
        if b2 > a2:
            out.append((a2, b2))
    return out


def open_hours(log: RunLog, greenhouse: GreenhouseId, t_from: float, t_to: float,
               end: Optional[float] = None) -> float:
    """Valve-open hours inside [t_from, t_to], from the log's transitions."""
    intervals = log.open_intervals(greenhouse, end if end is not None else t_to)
    return sum(b - a for a, b in clip_intervals(intervals, t_from, t_to)) / 3600.0


def summarize(
    log: RunLog,
    config: ScenarioConfig,
    warm_up: float = WARM_UP_DEFAULT,
    band_tolerance: float = 0.0,
    use_samples: bool = False,
) -> list[RunSummary]:
    """One RunSummary per greenhouse, in scenario order.

    Water volume is flow_rate times valve-open hours, by definition; the two
    fields are exactly consistent in every summary this function produces.
    """

    if warm_up < 0 or warm_up >= config.duration:
        raise ValueError("warm_up must lie inside the run: 0 <= warm_up < duration")
    duration = float(config.duration)
    out = []
    for gh in config.greenhouses:
        band = _band_for(config, gh.id)
        if use_samples:
            values = [r["moisture"] for r in log.of_kind("sample_delivered", greenhouse=gh.id)
                      if warm_up <= r["t"] <= duration]
        else:
            values = [r["moisture"] for r in log.of_kind("physics", greenhouse=gh.id)
                      if warm_up <= r["t"] <= duration]
        mean, stddev, amplitude, in_band = _series_stats(values, band, band_tolerance)
        hours = open_hours(log, gh.id, warm_up, duration, end=duration)
        commands = len([r for r in log.of_kind("command", greenhouse=gh.id)
                        if warm_up <= r["t"] <= duration])
        drops = len([r for r in log.of_kind("drop", greenhouse=gh.id)
                     if warm_up <= r["t"] <= duration])
        out.append(RunSummary(
            greenhouse=gh.id,
            mean=mean,
            stddev=stddev,
            amplitude=amplitude,
            time_in_band=in_band,
            valve_open_hours=hours,
            water_liters=gh.flow_rate * hours,
            commands=commands,
            drops=drops,
            warm_up=warm_up,
            duration=duration,
        ))
    return out


def summarize_store(
    store: TimeSeriesStore,
    config: ScenarioConfig,
    now: float,
    warm_up: float = 0.0,
    band_tolerance: float = 0.0,
) -> list[RunSummary]:
    """Live summary from the edge's own records (sample-based by nature)."""

    out = []
    for gh in config.greenhouses:
        band = _band_for(config, gh.id)
        samples = store.query(kind="sample", greenhouse=gh.id, t_from=warm_up, t_to=now)
        values = [r["moisture"] for r in samples]
        mean, stddev, amplitude, in_band = _series_stats(values, band, band_tolerance)
        # Reconstruct open intervals from the edge's valve belief records.
        intervals: list[tuple[float, float]] = []
        opened: Optional[float] = None
        for r in store.query(kind="valve", greenhouse=gh.id, t_to=now):
            if r["state"] == "open" and opened is None:
                opened = r["t"]
            elif r["state"] == "closed" and opened is not None:
                intervals.append((opened, r["t"]))
                opened = None
        if opened is not None:
            intervals.append((opened, now))
        hours = sum(b - a for a, b in clip_intervals(intervals, warm_up, now)) / 3600.0
        commands = len(store.query(kind="command", greenhouse=gh.id, t_from=warm_up, t_to=now))
        out.append(RunSummary(
            greenhouse=gh.id, mean=mean, stddev=stddev, amplitude=amplitude,
            time_in_band=in_band, valve_open_hours=hours,
            water_liters=gh.flow_rate * hours, commands=commands, drops=0,
            warm_up=warm_up, duration=now,
        ))
    return out


@dataclass(frozen=True)
class ComparisonReport:
    """Strategy A (baseline) versus strategy B on the same run window."""

    a: RunSummary
    b: RunSummary
    water_saving: float     # 1 - b.valve_open_hours / a.valve_open_hours
    ratios: dict[str, Optional[float]]
    deltas: dict[str, float]


def compare(a: RunSummary, b: RunSummary) -> ComparisonReport:
    if (a.warm_up, a.duration) != (b.warm_up, b.duration):
        raise ValueError("cannot compare summaries over different windows")
    ratios: dict[str, Optional[float]] = {}
    deltas: dict[str, float] = {}
    for name in SUMMARY_FIELDS:
        va, vb = float(getattr(a, name)), float(getattr(b, name))
        ratios[name] = (vb / va) if va != 0 else None
        deltas[name] = vb - va
    saving = 1.0 - (b.valve_open_hours / a.valve_open_hours) if a.valve_open_hours else 0.0
    return ComparisonReport(a=a, b=b, water_saving=saving, ratios=ratios, deltas=deltas)


def summaries_to_csv(summaries: list[RunSummary]) -> str:
    lines = [SUMMARY_CSV_HEADER]
    lines.extend(s.to_csv_row() for s in summaries)
    return "\n".join(lines) + "\n"
