"""Discrete-event simulator for the sensing and irrigation network.

Single-threaded and fully deterministic: one event queue ordered by
(fire_at, insertion sequence), one seeded random stream per entity, and
synchronous edge callbacks.  Given the same scenario and seed, two runs
produce byte-identical run logs.

Topology is a star of stars: motes uplink through their gateway to the edge
node, valve commands go back down through the gateway to the actuator.  Each
hop draws an independent loss decision and a latency in the configured
bounds.  Lost valve commands are gone for good; there is no retransmission,
recovery is the controller's business.

Soil state advances lazily: every read or valve switch first integrates the
bucket up to the current instant, splitting at tick boundaries and day/night
transitions, so water accounting is exact with respect to the valve timeline.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field
from random import Random
from typing import Any, Callable, Optional, Protocol

from . import runlog as rl
from .domain import (
    ActuatorId,
    ConfigurationError,
    GatewayId,
    GreenhouseConfig,
    GreenhouseId,
    LinkModel,
    MOISTURE_DECIMALS,
    MOISTURE_MAX,
    MOISTURE_MIN,
    MoistureSample,
    MoteId,
    ScenarioConfig,
    ValveAction,
    ValveCommand,
    scenario_to_json,
    validate_scenario,
)
from .rng import SeedSplitter
from .runlog import RunLog
from .soil import AmbientConditions, SoilState, conditions_at, step as soil_step


class EdgeHooks(Protocol):
    """What the simulator needs from an edge node (or any stand-in)."""

    def on_sample(self, sample: MoistureSample, now: float) -> None: ...

    def on_greenhouse_tick(self, greenhouse: GreenhouseId, now: float) -> None: ...


class NullHooks:
    """Edge that ignores everything; useful for pure-physics runs."""

    def on_sample(self, sample: MoistureSample, now: float) -> None:
        pass

    def on_greenhouse_tick(self, greenhouse: GreenhouseId, now: float) -> None:
        pass


@dataclass(frozen=True)
class Message:
    """A payload in flight along a fixed hop route."""

    payload: Any
    route: tuple[str, ...]      # node labels, e.g. ("mote:3", "gateway:1", "edge")
    msg_class: str              # "sample" or "command"


@dataclass(frozen=True)
class DeliveryOutcome:
    arrival: Optional[float]    # absolute arrival time, None when dropped
    dropped_hop: Optional[int]  # 0-based hop index of the loss, None when delivered


def deliver(message: Message, link: LinkModel, rng: Random, now: float) -> DeliveryOutcome:
    """Draw per-hop loss then latency; one loss kills the whole message.

    Draw order is fixed (loss before latency, hop by hop) so that an
    independent replay of the same stream reproduces the outcome.
    """

    hops = len(message.route) - 1
    if hops < 1:
        raise ConfigurationError(f"message route needs at least one hop: {message.route}")
    latency = 0.0
    for hop in range(hops):
        if rng.random() < link.loss_probability:
            return DeliveryOutcome(arrival=None, dropped_hop=hop)
        latency += rng.uniform(link.latency_min, link.latency_max)
    return DeliveryOutcome(arrival=now + latency, dropped_hop=None)


def sample_mote(
    mote: MoteId,
    greenhouse: GreenhouseId,
    true_moisture: float,
    rng: Random,
    sampled_at: float,
    noise_amplitude: float,
) -> MoistureSample:
    """Observe the true moisture plus zero-mean uniform noise, clamped and
    quantized to the sensor's 0.01 percent resolution."""

    noise = rng.uniform(-noise_amplitude, noise_amplitude)
    observed = min(MOISTURE_MAX, max(MOISTURE_MIN, true_moisture + noise))
    return MoistureSample(
        mote=mote,
        greenhouse=greenhouse,
        moisture=round(observed, MOISTURE_DECIMALS),
        sampled_at=sampled_at,
    )


def scenario_digest(config: ScenarioConfig) -> str:
    return hashlib.sha256(scenario_to_json(config).encode("utf-8")).hexdigest()[:16]


@dataclass
class _Cell:
    """Per-greenhouse physical state."""

    cfg: GreenhouseConfig
    moisture: float
    last_update: float = 0.0
    valve_open: bool = False
    open_seconds: float = 0.0


# Event kinds, processed strictly by (fire_at, seq).
_SAMPLE_DUE = "sample_due"
_ARRIVAL = "arrival"
_VALVE_APPLY = "valve_apply"
_PHYSICS_TICK = "physics_tick"

_EPS = 1e-9


class Simulation:
    """One scenario instance that can run to completion or be stepped.

    `run(hooks)` drives the whole scenario; `step_until(t)` advances event
    processing up to simulated time t, which is what the live service uses
    to pace the clock against the wall.
    """

    def __init__(self, config: ScenarioConfig):
        validate_scenario(config).raise_if_invalid()
        self.config = config
        self.now = 0.0
        self.log = RunLog()
        self.hooks: EdgeHooks = NullHooks()
        self._seq = 0
        self._queue: list[tuple[float, int, str, Any]] = []
        self._rngs = SeedSplitter(config.seed)
        self._finished = False

        self._cells: dict[GreenhouseId, _Cell] = {
            gh.id: _Cell(cfg=gh, moisture=gh.initial_moisture) for gh in config.greenhouses
        }
        self._mote_to_gh: dict[MoteId, GreenhouseConfig] = {}
        for gh in config.greenhouses:
            for m in gh.motes:
                self._mote_to_gh[m] = gh
        self._actuator_to_gh: dict[ActuatorId, GreenhouseConfig] = {
            gh.actuator: gh for gh in config.greenhouses
        }
        self._mote_gateway: dict[MoteId, GatewayId] = {}
        self._actuator_gateway: dict[ActuatorId, GatewayId] = {}
        for gw in config.gateways:
            for m in gw.motes:
                self._mote_gateway[m] = gw.id
            for a in gw.actuators:
                self._actuator_gateway[a] = gw.id

        self.log.append(rl.rec_start(config.seed, scenario_digest(config)))
        # Physics ticks carry the control clock as well, so they start at 0;
        # motes take their first reading one sampling period in.
        for gh in config.greenhouses:
            self._schedule(0.0, _PHYSICS_TICK, gh.id)
        for gh in config.greenhouses:
            for m in gh.motes:
                if config.sampling_period <= config.duration:
                    self._schedule(float(config.sampling_period), _SAMPLE_DUE, m)

    # -- scheduling ----------------------------------------------------

    def _schedule(self, t: float, kind: str, data: Any) -> None:
        heapq.heappush(self._queue, (t, self._seq, kind, data))
        self._seq += 1

    def bind_hooks(self, hooks: EdgeHooks) -> None:
        self.hooks = hooks
        binder = getattr(hooks, "bind_dispatch", None)
        if binder is not None:
            binder(self.submit_command)

    # -- physics -------------------------------------------------------

    def _next_ambient_boundary(self, t: float) -> float:
        amb = self.config.ambient
        day = math.floor(t / 86400.0) * 86400.0
        candidates = []
        for base in (day, day + 86400.0):
            candidates.append(base + amb.day_start)
            candidates.append(base + amb.day_start + amb.day_length)
        return min(c for c in candidates if c > t + _EPS)

    def _advance_cell(self, cell: _Cell, t_to: float) -> None:
        """Integrate the bucket from its last update up to t_to."""
        if t_to <= cell.last_update + _EPS:
            return
        cfg = self.config
        t = cell.last_update
        while t < t_to - _EPS:
            t_next = min(t_to, t + cfg.physics_tick, self._next_ambient_boundary(t))
            ambient = conditions_at(cfg.ambient, t)
            state = soil_step(
                SoilState(moisture=cell.moisture, updated_at=t),
                cell.valve_open,
                ambient,
                cell.cfg.plant,
                cfg.soil.infil_rate,
                t_next - t,
                eta_min=cfg.soil.eta_min,
                m_knee=cfg.soil.m_knee,
            )
            cell.moisture = state.moisture
            if cell.valve_open:
                cell.open_seconds += t_next - t
            t = t_next
        cell.last_update = t_to

    def true_moisture(self, greenhouse: GreenhouseId, t: Optional[float] = None) -> float:
        cell = self._cells[greenhouse]
        self._advance_cell(cell, self.now if t is None else t)
        return cell.moisture

    # -- message paths ---------------------------------------------------

    def _send(self, message: Message, rng_tag: str, entity: int, greenhouse: GreenhouseId) -> None:
        outcome = deliver(message, self.config.link, self._rngs.stream(rng_tag), self.now)
        if outcome.dropped_hop is not None:
            self.log.append(rl.rec_drop(self.now, message.msg_class, outcome.dropped_hop,
                                        entity, greenhouse))
            return
        if message.msg_class == "sample":
            self._schedule(outcome.arrival, _ARRIVAL, message.payload)
        else:
            self._schedule(outcome.arrival, _VALVE_APPLY, message.payload)

    def submit_command(self, command: ValveCommand) -> None:
        """Entry point for the edge node; routes the command to its actuator."""
        gh = self._actuator_to_gh.get(command.target)
        if gh is None:
            raise ConfigurationError(f"command targets unknown actuator {command.target}")
        gateway = self._actuator_gateway[command.target]
        self.log.append(rl.rec_command(self.now, gh.id, command.target,
                                       command.action.value, command.origin.value))
        message = Message(
            payload=command,
            route=("edge", f"gateway:{gateway}", f"actuator:{command.target}"),
            msg_class="command",
        )
        self._send(message, f"actuator.{command.target}.link", command.target, gh.id)

    # -- event handlers --------------------------------------------------

    def _on_sample_due(self, mote: MoteId) -> None:
        gh = self._mote_to_gh[mote]
        cell = self._cells[gh.id]
        self._advance_cell(cell, self.now)
        sample = sample_mote(
            mote, gh.id, cell.moisture,
            self._rngs.stream(f"mote.{mote}.noise"),
            self.now, self.config.soil.noise_amplitude,
        )
        self.log.append(rl.rec_sample_emitted(self.now, mote, gh.id, sample.moisture))
        gateway = self._mote_gateway[mote]
        message = Message(
            payload=sample,
            route=(f"mote:{mote}", f"gateway:{gateway}", "edge"),
            msg_class="sample",
        )
        self._send(message, f"mote.{mote}.link", mote, gh.id)
        next_t = self.now + self.config.sampling_period
        if next_t <= self.config.duration:
            self._schedule(next_t, _SAMPLE_DUE, mote)

    def _on_arrival(self, sample: MoistureSample) -> None:
        self.log.append(rl.rec_sample_delivered(self.now, sample.mote, sample.greenhouse,
                                                sample.moisture, sample.sampled_at))
        self.hooks.on_sample(sample, self.now)

    def _on_valve_apply(self, command: ValveCommand) -> None:
        gh = self._actuator_to_gh[command.target]
        cell = self._cells[gh.id]
        # In-flight commands may land just past the end of the run; they are
        # still applied (conservation) but never accrue watering time.
        self._advance_cell(cell, min(self.now, float(self.config.duration)))
        want_open = command.action is ValveAction.OPEN
        applied = want_open != cell.valve_open
        if applied:
            cell.valve_open = want_open
        self.log.append(rl.rec_valve(self.now, command.target, gh.id,
                                     command.action.value, applied))

    def _on_physics_tick(self, greenhouse: GreenhouseId) -> None:
        cfg = self.config
        cell = self._cells[greenhouse]
        self._advance_cell(cell, self.now)
        self.log.append(rl.rec_physics(self.now, greenhouse, cell.moisture, cell.valve_open))
        if self.now < cfg.duration:
            # The control clock stops strictly before the end of the run; the
            # final tick only records the closing state.
            self.hooks.on_greenhouse_tick(greenhouse, self.now)
            next_t = min(self.now + cfg.physics_tick, float(cfg.duration))
            self._schedule(next_t, _PHYSICS_TICK, greenhouse)

    # -- driving ---------------------------------------------------------

    _HANDLERS = {
        _SAMPLE_DUE: "_on_sample_due",
        _ARRIVAL: "_on_arrival",
        _VALVE_APPLY: "_on_valve_apply",
        _PHYSICS_TICK: "_on_physics_tick",
    }

    def step_until(self, t_target: float) -> None:
        """Process every event with fire_at <= t_target, in order."""
        while self._queue and self._queue[0][0] <= t_target:
            fire_at, _seq, kind, data = heapq.heappop(self._queue)
            self.now = fire_at
            getattr(self, self._HANDLERS[kind])(data)
        if math.isfinite(t_target):
            self.now = max(self.now, min(t_target, float(self.config.duration)))

    @property
    def exhausted(self) -> bool:
        return not self._queue

    def finalize(self) -> RunLog:
        """Advance all cells to the end of the run and seal the log."""
        if not self._finished:
            for cell in self._cells.values():
                self._advance_cell(cell, float(self.config.duration))
            self.log.append(rl.rec_end(
                float(self.config.duration),
                {gid: cell.moisture for gid, cell in self._cells.items()},
                {gid: cell.open_seconds for gid, cell in self._cells.items()},
            ))
            self._finished = True
        return self.log

    def run(self, hooks: Optional[EdgeHooks] = None) -> RunLog:
        if hooks is not None:
            self.bind_hooks(hooks)
        self.step_until(math.inf)
        return self.finalize()

    def open_seconds(self, greenhouse: GreenhouseId) -> float:
        return self._cells[greenhouse].open_seconds


def run(config: ScenarioConfig, hooks: Optional[EdgeHooks] = None) -> RunLog:
    """Run one scenario start to finish and return its log."""
    return Simulation(config).run(hooks)
