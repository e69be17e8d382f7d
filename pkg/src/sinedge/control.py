"""Pure control decisions: aggregation, hysteresis and timed schedules.

Nothing here touches a clock, a socket or a store.  Every function takes
explicit state and explicit time and either returns a command or does not;
the edge node owns sequencing, persistence and dispatch.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .domain import (
    ActuatorId,
    CommandOrigin,
    ControlMode,
    GreenhouseId,
    MoistureBand,
    MoistureSample,
    MoteId,
    TimedSchedule,
    ValveAction,
    ValveCommand,
    ValveState,
)
from .soil import ContractViolationError


class ModeConflictError(RuntimeError):
    """A manual action was attempted in Auto mode or vice versa."""


@dataclass(frozen=True)
class Aggregate:
    """Greenhouse-level moisture estimate plus a staleness verdict."""

    value: float
    stale: bool


@dataclass
class ControllerState:
    """Mutable per-greenhouse controller bookkeeping, owned by the edge node.

    believed_valve is the edge's view of the valve: it only changes when a
    command is issued (or a manual override acknowledged), never by guessing.
    """

    greenhouse: GreenhouseId
    believed_valve: ValveState = ValveState.UNKNOWN
    last_samples: dict[MoteId, MoistureSample] = field(default_factory=dict)
    mode: ControlMode = ControlMode.AUTO


def aggregate(samples: list[MoistureSample], now: float, staleness_limit: float) -> Aggregate:
    """Mean moisture over fresh samples; all-stale falls back to mean of all.

    A sample is fresh when now - sampled_at <= staleness_limit.  The caller
    must pass at least one sample.
    """

    if not samples:
        raise ContractViolationError("aggregate requires at least one sample")
    fresh = [s.moisture for s in samples if now - s.sampled_at <= staleness_limit]
    if fresh:
        return Aggregate(value=statistics.fmean(fresh), stale=False)
    return Aggregate(value=statistics.fmean(s.moisture for s in samples), stale=True)


def evaluate_hysteresis(
    state: ControllerState,
    band: MoistureBand,
    aggregated: float,
    now: float,
    target: ActuatorId,
) -> ValveCommand | None:
    """Edge-triggered bang-bang decision.

    Open strictly below the band, close strictly above it, and only when the
    believed valve state does not already match; anywhere inside the band the
    valve holds.  Exact band endpoints never trigger.
    """

    if state.mode is not ControlMode.AUTO:
        raise ContractViolationError("evaluate_hysteresis requires Auto mode; gate on mode first")
    if aggregated < band.low_lim and state.believed_valve is not ValveState.OPEN:
        return ValveCommand(target, state.greenhouse, ValveAction.OPEN, now,
                            CommandOrigin.AUTO_CONTROLLER)
    if aggregated > band.upper_lim and state.believed_valve is not ValveState.CLOSED:
        return ValveCommand(target, state.greenhouse, ValveAction.CLOSE, now,
                            CommandOrigin.AUTO_CONTROLLER)
    return None


def evaluate_timed(
    schedule: TimedSchedule,
    now: float,
    state: ControllerState,
    target: ActuatorId,
) -> ValveCommand | None:
    """Idempotent schedule follower: command only on a desired-state change.

    The valve should be open during [phase + k*period, phase + k*period +
    duration) and closed otherwise (also before the first activation).
    """

    if state.mode is not ControlMode.AUTO:
        raise ContractViolationError("evaluate_timed requires Auto mode; gate on mode first")
    if now < schedule.phase:
        desired = ValveState.CLOSED
    else:
        position = (now - schedule.phase) % schedule.period
        desired = ValveState.OPEN if position < schedule.duration else ValveState.CLOSED
    if state.believed_valve is desired:
        return None
    action = ValveAction.OPEN if desired is ValveState.OPEN else ValveAction.CLOSE
    return ValveCommand(target, state.greenhouse, action, now, CommandOrigin.AUTO_CONTROLLER)


def apply_manual_override(
    state: ControllerState,
    action: ValveAction,
    now: float,
    target: ActuatorId,
) -> ValveCommand:
    """Operator-forced command; requires Manual mode.  Re-asserts are allowed."""

    if state.mode is not ControlMode.MANUAL:
        raise ModeConflictError("manual valve override requires Manual mode")
    return ValveCommand(target, state.greenhouse, action, now, CommandOrigin.MANUAL_OPERATOR)


def note_issued(state: ControllerState, command: ValveCommand) -> None:
    """Record a dispatched command in the controller's valve belief."""

    state.believed_valve = (
        ValveState.OPEN if command.action is ValveAction.OPEN else ValveState.CLOSED
    )
