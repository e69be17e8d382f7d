"""The edge node: local ingest, per-greenhouse control loops, operator API.

One EdgeNode instance serves a whole site.  It keeps every record in its
local TimeSeriesStore, runs one control loop per greenhouse (sample-driven
for hysteresis strategies, clock-driven for timed ones) and hands finished
commands to whatever dispatch callable it was wired to: the simulator's
submit_command, a gateway socket writer, or a test collector.

Nothing ever leaves the node.  The EdgeBoundaryGuard tallies records that
*would* be synchronised to a remote backend when the scenario says WithBackhaul;
in EdgeOnly mode the tally must stay at zero forever, and the test suite
checks exactly that after every test.
"""

from __future__ import annotations

import threading
import weakref
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .control import (
    Aggregate,
    ControllerState,
    ModeConflictError,
    aggregate,
    apply_manual_override,
    evaluate_hysteresis,
    evaluate_timed,
    note_issued,
)
from .domain import (
    ControlMode,
    EdgeMode,
    FarmerSchedule,
    GreenhouseConfig,
    GreenhouseId,
    Hysteresis,
    MoistureBand,
    MoistureSample,
    MoteId,
    STALENESS_FACTOR,
    ScenarioConfig,
    Strategy,
    TimedProgram,
    TimedSchedule,
    ValveAction,
    ValveCommand,
    ValveState,
)
from .store import TimeSeriesStore

DispatchFn = Callable[[ValveCommand], None]


class UnknownGreenhouseError(KeyError):
    pass


class EdgeBoundaryGuard:
    """Counts records that would leave the edge; transmits nothing, ever."""

    _instances: "weakref.WeakSet[EdgeBoundaryGuard]" = weakref.WeakSet()

    def __init__(self, mode: EdgeMode):
        self.mode = mode
        self.egress_counter = 0
        EdgeBoundaryGuard._instances.add(self)

    def on_record_persisted(self) -> None:
        if self.mode is EdgeMode.WITH_BACKHAUL:
            self.egress_counter += 1

    @classmethod
    def live_instances(cls) -> list["EdgeBoundaryGuard"]:
        return list(cls._instances)


@dataclass
class _Loop:
    """Per-greenhouse control loop state."""

    cfg: GreenhouseConfig
    strategy: Strategy
    state: ControllerState
    band: Optional[MoistureBand] = None
    schedule: Optional[TimedSchedule] = None


class EdgeNode:
    """Single-site edge controller; all methods take explicit simulated time."""

    def __init__(
        self,
        config: ScenarioConfig,
        store: Optional[TimeSeriesStore] = None,
        dispatch: Optional[DispatchFn] = None,
        staleness_limit: Optional[float] = None,
    ):
        self.config = config
        self.store = store if store is not None else TimeSeriesStore()
        self.guard = EdgeBoundaryGuard(config.mode)
        self.staleness_limit = (
            staleness_limit if staleness_limit is not None
            else STALENESS_FACTOR * config.sampling_period
        )
        self._dispatch: DispatchFn = dispatch if dispatch is not None else (lambda cmd: None)
        self._lock = threading.RLock()
        self._mote_to_gh: dict[MoteId, GreenhouseId] = {}
        self._loops: dict[GreenhouseId, _Loop] = {}
        for gh in config.greenhouses:
            strat = config.strategies[gh.id]
            loop = _Loop(cfg=gh, strategy=strat, state=ControllerState(greenhouse=gh.id))
            if isinstance(strat, Hysteresis):
                loop.band = strat.band
            else:
                loop.schedule = strat.schedule
            self._loops[gh.id] = loop
            for m in gh.motes:
                self._mote_to_gh[m] = gh.id

    def bind_dispatch(self, dispatch: DispatchFn) -> None:
        self._dispatch = dispatch

    def _loop(self, greenhouse: GreenhouseId) -> _Loop:
        try:
            return self._loops[greenhouse]
        except KeyError:
            raise UnknownGreenhouseError(greenhouse) from None

    def _persist(self, record: dict[str, Any]) -> None:
        self.store.append(record)
        self.guard.on_record_persisted()

    def _issue(self, loop: _Loop, command: ValveCommand) -> None:
        self._persist({
            "t": command.issued_at, "kind": "command", "greenhouse": loop.cfg.id,
            "actuator": command.target, "action": command.action.value,
            "origin": command.origin.value,
        })
        before = loop.state.believed_valve
        note_issued(loop.state, command)
        if loop.state.believed_valve is not before:
            self._persist({
                "t": command.issued_at, "kind": "valve", "greenhouse": loop.cfg.id,
                "state": loop.state.believed_valve.value,
            })
        self._dispatch(command)

    # -- ingest path -----------------------------------------------------

    def ingest(self, sample: MoistureSample, now: float) -> None:
        """Persist one mote reading and let the greenhouse's loop react."""
        with self._lock:
            gid = self._mote_to_gh.get(sample.mote)
            if gid is None or sample.greenhouse != gid:
                # Unknown or misattributed source: keep the evidence, touch
                # nothing else.
                self._persist({
                    "t": now, "kind": "quarantine", "mote": sample.mote,
                    "greenhouse": sample.greenhouse, "moisture": sample.moisture,
                    "sampled_at": sample.sampled_at,
                })
                return
            loop = self._loop(gid)
            self._persist({
                "t": now, "kind": "sample", "greenhouse": gid, "mote": sample.mote,
                "moisture": sample.moisture, "sampled_at": sample.sampled_at,
            })
            prev = loop.state.last_samples.get(sample.mote)
            if prev is None or sample.sampled_at >= prev.sampled_at:
                loop.state.last_samples[sample.mote] = sample
            self._evaluate_hysteresis(loop, now)

    def _evaluate_hysteresis(self, loop: _Loop, now: float) -> None:
        if loop.band is None or loop.state.mode is not ControlMode.AUTO:
            return
        if not loop.state.last_samples:
            return
        agg = aggregate(list(loop.state.last_samples.values()), now, self.staleness_limit)
        command = evaluate_hysteresis(loop.state, loop.band, agg.value, now, loop.cfg.actuator)
        if command is not None:
            self._issue(loop, command)

    # -- clock path --------------------------------------------------------

    def tick_greenhouse(self, greenhouse: GreenhouseId, now: float) -> None:
        """Evaluate the clock-driven strategy of one greenhouse, if any."""
        with self._lock:
            loop = self._loop(greenhouse)
            if loop.schedule is None or loop.state.mode is not ControlMode.AUTO:
                return
            command = evaluate_timed(loop.schedule, now, loop.state, loop.cfg.actuator)
            if command is not None:
                self._issue(loop, command)

    # simulator hook surface
    def on_sample(self, sample: MoistureSample, now: float) -> None:
        self.ingest(sample, now)

    def on_greenhouse_tick(self, greenhouse: GreenhouseId, now: float) -> None:
        self.tick_greenhouse(greenhouse, now)

    # -- operator surface ---------------------------------------------------

    def set_band(self, greenhouse: GreenhouseId, band: MoistureBand, now: float,
                 operator: str = "operator") -> None:
        """Replace the moisture band; takes effect at the next evaluation."""
        with self._lock:
            loop = self._loop(greenhouse)
            problems = band.violations()
            if problems:
                raise ValueError("; ".join(problems))
            loop.band = band
            self._persist({
                "t": now, "kind": "band_change", "greenhouse": greenhouse,
                "low_lim": band.low_lim, "upper_lim": band.upper_lim,
                "operator": operator,
            })

    def set_mode(self, greenhouse: GreenhouseId, mode: ControlMode, now: float) -> None:
        """Switch Auto/Manual.  Manual silences the automatic loop; going
        back to Auto re-evaluates immediately so a band breach that happened
        meanwhile is acted on without waiting for the next sample."""
        with self._lock:
            loop = self._loop(greenhouse)
            if loop.state.mode is mode:
                return
            loop.state.mode = mode
            self._persist({
                "t": now, "kind": "mode_change", "greenhouse": greenhouse,
                "mode": mode.value,
            })
            if mode is ControlMode.AUTO:
                if loop.band is not None:
                    self._evaluate_hysteresis(loop, now)
                elif loop.schedule is not None:
                    self.tick_greenhouse(greenhouse, now)

    def manual_valve(self, greenhouse: GreenhouseId, action: ValveAction, now: float) -> ValveCommand:
        with self._lock:
            loop = self._loop(greenhouse)
            command = apply_manual_override(loop.state, action, now, loop.cfg.actuator)
            self._issue(loop, command)
            return command

    # -- queries -----------------------------------------------------------

    _SERIES_KINDS = {"moisture": "sample", "valve": "valve", "commands": "command"}

    def query_series(self, greenhouse: GreenhouseId, t_from: float, t_to: float,
                     metric: str = "moisture") -> list[dict[str, Any]]:
        with self._lock:
            self._loop(greenhouse)  # existence check
            kind = self._SERIES_KINDS.get(metric)
            if kind is None:
                raise ValueError(f"unknown metric {metric!r}; expected one of "
                                 f"{sorted(self._SERIES_KINDS)}")
            if t_to < t_from:
                raise ValueError("series range is inverted: to < from")
            return self.store.query(kind=kind, greenhouse=greenhouse,
                                    t_from=t_from, t_to=t_to)

    def live_status(self, now: float) -> list[dict[str, Any]]:
        """Operator dashboard snapshot, one entry per greenhouse."""
        with self._lock:
            out = []
            for gh in self.config.greenhouses:
                loop = self._loops[gh.id]
                samples = list(loop.state.last_samples.values())
                agg: Optional[Aggregate] = None
                if samples:
                    agg = aggregate(samples, now, self.staleness_limit)
                stored = self.store.query(kind="sample", greenhouse=gh.id)
                out.append({
                    "greenhouse": gh.id,
                    "mode": loop.state.mode.value,
                    "valve_belief": loop.state.believed_valve.value,
                    "aggregate": None if agg is None else round(agg.value, 4),
                    "aggregate_stale": agg.stale if agg is not None else True,
                    "band": None if loop.band is None else {
                        "low_lim": loop.band.low_lim, "upper_lim": loop.band.upper_lim,
                    },
                    "strategy": type(loop.strategy).__name__.lower(),
                    "samples_stored": len(stored),
                    "first_sample_at": stored[0]["t"] if stored else None,
                    "last_sample_at": stored[-1]["t"] if stored else None,
                })
            return out

    @property
    def egress_counter(self) -> int:
        return self.guard.egress_counter


def build_edge(config: ScenarioConfig, store_path: Optional[Any] = None) -> EdgeNode:
    return EdgeNode(config, store=TimeSeriesStore(store_path))
