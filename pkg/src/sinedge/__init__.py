"""Deterministic smart-irrigation network simulator and edge control service."""

from .domain import (
    ControlMode,
    EdgeMode,
    GreenhouseConfig,
    MoistureBand,
    MoistureSample,
    PlantProfile,
    ScenarioConfig,
    ValveAction,
    ValveCommand,
    ValveState,
    default_scenario,
    load_scenario,
    validate_scenario,
)
from .netsim import Simulation, run
from .runlog import RunLog

__version__ = "0.1.0"

__all__ = [
    "ControlMode",
    "EdgeMode",
    "GreenhouseConfig",
    "MoistureBand",
    "MoistureSample",
    "PlantProfile",
    "RunLog",
    "ScenarioConfig",
    "Simulation",
    "ValveAction",
    "ValveCommand",
    "ValveState",
    "__version__",
    "default_scenario",
    "load_scenario",
    "run",
    "validate_scenario",
]
