"""Shared domain types, identifiers and the scenario configuration model.

Everything in this module is a plain immutable value.  Configs are built
once, validated explicitly with :func:`validate_scenario` (construction never
raises, so an invalid file can still be parsed and reported on), and then
handed unchanged to the simulator, the edge node and the service layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping, Optional, Union

MoteId = int
ActuatorId = int
GatewayId = int
GreenhouseId = str

# Sensor readings are reported as percent volumetric water content with a
# fixed 0.01 resolution.
MOISTURE_DECIMALS = 2
MOISTURE_MIN = 0.0
MOISTURE_MAX = 100.0

# Calibrated model defaults.  These are mirrored in scenarios/calibration.json
# and a test keeps file and code in sync; change them in both places.
INFIL_RATE_DEFAULT = 6.0        # percent moisture per hour while the valve is open
ETA_MIN_DEFAULT = 0.3           # retention efficiency of bone-dry soil
M_KNEE_DEFAULT = 40.0           # moisture level above which retention is perfect
NOISE_AMPLITUDE_DEFAULT = 0.5   # sensor noise, uniform in +/- this many percent
WILTING_POINT = 10.0            # moisture treated as wilting in calibration sweeps
POT_INITIAL_MOISTURE = 50.0     # starting moisture for unwatered-pot sweeps
INITIAL_MOISTURE_DEFAULT = 52.0

SAMPLING_PERIOD_DEFAULT = 60    # seconds between mote readings
PHYSICS_TICK_DEFAULT = 60       # seconds between soil integration steps
STALENESS_FACTOR = 5            # a sample older than factor * sampling period is stale

DAY_SECONDS = 86400


class ValveAction(str, Enum):
    OPEN = "open"
    CLOSE = "close"


class ValveState(str, Enum):
    OPEN = "open"
    CLOSED = "closed"
    UNKNOWN = "unknown"


class CommandOrigin(str, Enum):
    AUTO_CONTROLLER = "auto_controller"
    MANUAL_OPERATOR = "manual_operator"


class ControlMode(str, Enum):
    AUTO = "auto"
    MANUAL = "manual"


class EdgeMode(str, Enum):
    """Where telemetry is allowed to go.

    EDGE_ONLY keeps every record on the edge node.  WITH_BACKHAUL marks
    records that would be synchronised to a remote backend; nothing is ever
    transmitted either way, the would-be records are only counted.
    """

    EDGE_ONLY = "edge_only"
    WITH_BACKHAUL = "with_backhaul"


class ConfigurationError(ValueError):
    """A scenario is structurally unusable (unknown ids, unparsable file)."""


@dataclass(frozen=True)
class MoistureSample:
    """One mote reading: percent moisture at a point in simulated time."""

    mote: MoteId
    greenhouse: GreenhouseId
    moisture: float
    sampled_at: float


@dataclass(frozen=True)
class ValveCommand:
    target: ActuatorId
    greenhouse: GreenhouseId
    action: ValveAction
    issued_at: float
    origin: CommandOrigin


@dataclass(frozen=True)
class MoistureBand:
    """Closed moisture corridor [low_lim, upper_lim] the controller defends."""

    low_lim: float
    upper_lim: float

    def violations(self) -> list[str]:
        out = []
        if not (self.low_lim < self.upper_lim):
            out.append("band inverted: low_lim must be strictly below upper_lim")
        if self.low_lim < MOISTURE_MIN or self.upper_lim > MOISTURE_MAX:
            out.append("band outside the 0..100 moisture range")
        return out

    def contains(self, value: float, tolerance: float = 0.0) -> bool:
        return (self.low_lim - tolerance) <= value <= (self.upper_lim + tolerance)


DEFAULT_BAND = MoistureBand(50.0, 55.0)


@dataclass(frozen=True)
class PlantProfile:
    """Crop water demand: moisture percent drawn per hour, day vs night."""

    name: str
    uptake_rate_day: float
    uptake_rate_night: float


# Built-in profiles.  Geranium is fixed by the unwatered-pot calibration sweep
# in the test suite (about one week from moist to wilting); the others are
# spaced so that thirstier plants need visibly more frequent watering.
STRAWBERRY = PlantProfile("strawberry", 0.5, 0.25)
GERANIUM = PlantProfile("geranium", 0.3, 0.15)
LAVENDER = PlantProfile("lavender", 0.8, 0.4)
MINT = PlantProfile("mint", 3.0, 1.5)

PLANT_LIBRARY: Mapping[str, PlantProfile] = {
    p.name: p for p in (STRAWBERRY, GERANIUM, LAVENDER, MINT)
}


@dataclass(frozen=True)
class TimedSchedule:
    """Open the valve for `duration` seconds every `period` seconds.

    Activations happen at phase, phase + period, phase + 2*period, ...
    """

    period: int
    duration: int
    phase: int = 0

    def violations(self) -> list[str]:
        out = []
        if self.period <= 0:
            out.append("schedule period must be positive")
        elif not (0 < self.duration < self.period):
            out.append("schedule duration must lie strictly between 0 and the period")
        if self.phase < 0:
            out.append("schedule phase must not be negative")
        return out


# The small-scale programmer waters once every second day for half an hour;
# the farmer habit being replaced is twice a day for two hours.
PROGRAMMER_SCHEDULE = TimedSchedule(period=172800, duration=1800, phase=0)
FARMER_SCHEDULE = TimedSchedule(period=43200, duration=7200, phase=21600)


@dataclass(frozen=True)
class Hysteresis:
    """Sample-driven bang-bang strategy defending a moisture band."""

    band: MoistureBand


@dataclass(frozen=True)
class TimedProgram:
    """Clock-driven strategy mimicking a hardware irrigation programmer."""

    schedule: TimedSchedule


@dataclass(frozen=True)
class FarmerSchedule:
    """Clock-driven strategy reproducing the manual watering habit."""

    schedule: TimedSchedule


Strategy = Union[Hysteresis, TimedProgram, FarmerSchedule]


@dataclass(frozen=True)
class GreenhouseConfig:
    id: GreenhouseId
    lines: int
    motes: tuple[MoteId, ...]
    actuator: ActuatorId
    plant: PlantProfile
    flow_rate: float            # liters per hour while the valve is open
    initial_moisture: float = INITIAL_MOISTURE_DEFAULT


@dataclass(frozen=True)
class GatewayConfig:
    id: GatewayId
    motes: tuple[MoteId, ...]
    actuators: tuple[ActuatorId, ...]


@dataclass(frozen=True)
class AmbientCycle:
    """Diurnal ambient pattern: a warm day window inside each 24 h cycle."""

    day_temp: float = 36.0
    night_temp: float = 30.0
    day_start: int = 21600      # seconds past midnight, 06:00
    day_length: int = 43200     # 12 hours of daytime

    def is_day(self, t: float) -> bool:
        tod = t % DAY_SECONDS
        return self.day_start <= tod < self.day_start + self.day_length

    def temperature(self, t: float) -> float:
        return self.day_temp if self.is_day(t) else self.night_temp


@dataclass(frozen=True)
class LinkModel:
    """Per-hop radio model: independent loss draw, then a latency draw."""

    loss_probability: float = 0.05
    latency_min: float = 0.05
    latency_max: float = 0.5


@dataclass(frozen=True)
class SoilParams:
    infil_rate: float = INFIL_RATE_DEFAULT
    eta_min: float = ETA_MIN_DEFAULT
    m_knee: float = M_KNEE_DEFAULT
    noise_amplitude: float = NOISE_AMPLITUDE_DEFAULT


@dataclass(frozen=True)
class ScenarioConfig:
    greenhouses: tuple[GreenhouseConfig, ...]
    gateways: tuple[GatewayConfig, ...]
    strategies: Mapping[GreenhouseId, Strategy]
    duration: int
    seed: int
    ambient: AmbientCycle = AmbientCycle()
    link: LinkModel = LinkModel()
    soil: SoilParams = SoilParams()
    mode: EdgeMode = EdgeMode.EDGE_ONLY
    sampling_period: int = SAMPLING_PERIOD_DEFAULT
    physics_tick: int = PHYSICS_TICK_DEFAULT

    def greenhouse(self, gid: GreenhouseId) -> GreenhouseConfig:
        for gh in self.greenhouses:
            if gh.id == gid:
                return gh
        raise KeyError(gid)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_if_invalid(self) -> None:
        if self.violations:
            raise ConfigurationError("; ".join(self.violations))


def validate_scenario(config: ScenarioConfig) -> ValidationReport:
    """Collect every rule violation in one pass; an empty report means valid."""

    v: list[str] = []

    if config.duration <= 0:
        v.append("duration must be positive")
    if config.sampling_period <= 0:
        v.append("sampling period must be positive")
    if config.physics_tick <= 0:
        v.append("physics tick must be positive")
    elif config.physics_tick > config.sampling_period > 0:
        v.append("physics tick must not exceed the sampling period")

    if not config.greenhouses:
        v.append("scenario must contain at least one greenhouse")

    seen_gh: set[GreenhouseId] = set()
    seen_motes: set[MoteId] = set()
    seen_actuators: set[ActuatorId] = set()
    for gh in config.greenhouses:
        if gh.id in seen_gh:
            v.append(f"duplicate greenhouse id {gh.id!r}")
        seen_gh.add(gh.id)
        if not gh.id or len(gh.id) > 8 or not gh.id.isascii():
            v.append(f"greenhouse id {gh.id!r} must be 1..8 ASCII characters")
        if gh.lines < 1:
            v.append(f"greenhouse {gh.id}: needs at least one irrigation line")
        if not gh.motes:
            v.append(f"greenhouse {gh.id}: needs at least one mote")
        for m in gh.motes:
            if m in seen_motes:
                v.append(f"mote {m} assigned to more than one greenhouse")
            if m < 0:
                v.append(f"mote id {m} must be a small unsigned integer")
            seen_motes.add(m)
        if gh.actuator in seen_actuators:
            v.append(f"actuator {gh.actuator} assigned to more than one greenhouse")
        if gh.actuator < 0:
            v.append(f"actuator id {gh.actuator} must be a small unsigned integer")
        seen_actuators.add(gh.actuator)
        if gh.flow_rate <= 0:
            v.append(f"greenhouse {gh.id}: flow rate must be positive")
        if not (MOISTURE_MIN <= gh.initial_moisture <= MOISTURE_MAX):
            v.append(f"greenhouse {gh.id}: initial moisture outside 0..100")
        if gh.plant.uptake_rate_day <= 0 or gh.plant.uptake_rate_night <= 0:
            v.append(f"greenhouse {gh.id}: plant uptake rates must be positive")
        if gh.plant.uptake_rate_night > gh.plant.uptake_rate_day:
            v.append(f"greenhouse {gh.id}: night uptake must not exceed day uptake")

    gw_motes: set[MoteId] = set()
    gw_actuators: set[ActuatorId] = set()
    seen_gw: set[GatewayId] = set()
    for gw in config.gateways:
        if gw.id in seen_gw:
            v.append(f"duplicate gateway id {gw.id}")
        seen_gw.add(gw.id)
        for m in gw.motes:
            if m in gw_motes:
                v.append(f"mote {m} attached to more than one gateway")
            gw_motes.add(m)
            if m not in seen_motes:
                v.append(f"gateway {gw.id} references unknown mote {m}")
        for a in gw.actuators:
            if a in gw_actuators:
                v.append(f"actuator {a} attached to more than one gateway")
            gw_actuators.add(a)
            if a not in seen_actuators:
                v.append(f"gateway {gw.id} references unknown actuator {a}")
    for m in sorted(seen_motes - gw_motes):
        v.append(f"mote {m} is not attached to any gateway")
    for a in sorted(seen_actuators - gw_actuators):
        v.append(f"actuator {a} is not attached to any gateway")

    for gh in config.greenhouses:
        strat = config.strategies.get(gh.id)
        if strat is None:
            v.append(f"greenhouse {gh.id}: no control strategy configured")
            continue
        if isinstance(strat, Hysteresis):
            v.extend(f"greenhouse {gh.id}: {msg}" for msg in strat.band.violations())
        else:
            v.extend(f"greenhouse {gh.id}: {msg}" for msg in strat.schedule.violations())
    for gid in config.strategies:
        if gid not in seen_gh:
            v.append(f"strategy configured for unknown greenhouse {gid!r}")

    if not (0.0 <= config.link.loss_probability <= 1.0):
        v.append("link loss probability must lie in 0..1")
    if config.link.latency_min < 0 or config.link.latency_max < config.link.latency_min:
        v.append("link latency bounds must satisfy 0 <= min <= max")

    if config.soil.infil_rate <= 0:
        v.append("soil infiltration rate must be positive")
    if not (0.0 < config.soil.eta_min <= 1.0):
        v.append("soil eta_min must lie in (0, 1]")
    if config.soil.m_knee <= 0 or config.soil.m_knee > MOISTURE_MAX:
        v.append("soil m_knee must lie in (0, 100]")
    if config.soil.noise_amplitude < 0:
        v.append("sensor noise amplitude must not be negative")

    return ValidationReport(tuple(v))


def default_scenario() -> ScenarioConfig:
    """The two-greenhouse pilot: farmer habit in A, banded control in B.

    Three simulated days, four drip lines per greenhouse, two motes and one
    valve actuator each, one shared gateway.  Links are kept clean here so the
    A/B comparison measures the controllers, not radio luck; lossy variants
    ship alongside as separate scenario files.
    """

    gh_a = GreenhouseConfig(
        id="A", lines=4, motes=(1, 2), actuator=101,
        plant=STRAWBERRY, flow_rate=600.0,
    )
    gh_b = GreenhouseConfig(
        id="B", lines=4, motes=(3, 4), actuator=102,
        plant=STRAWBERRY, flow_rate=600.0,
    )
    return ScenarioConfig(
        greenhouses=(gh_a, gh_b),
        gateways=(GatewayConfig(id=1, motes=(1, 2, 3, 4), actuators=(101, 102)),),
        strategies={
            "A": FarmerSchedule(FARMER_SCHEDULE),
            "B": Hysteresis(DEFAULT_BAND),
        },
        duration=259200,
        seed=42,
        link=LinkModel(loss_probability=0.0),
    )


# -- serialization ----------------------------------------------------------
#
# Scenario files are JSON with a fixed field layout; serialize(parse(text))
# reproduces the input byte for byte for any config produced by this module.

_STRATEGY_KINDS = {
    Hysteresis: "hysteresis",
    TimedProgram: "timed_program",
    FarmerSchedule: "farmer_schedule",
}


def _strategy_to_dict(strat: Strategy) -> dict[str, Any]:
    if isinstance(strat, Hysteresis):
        return {
            "kind": "hysteresis",
            "low_lim": strat.band.low_lim,
            "upper_lim": strat.band.upper_lim,
        }
    return {
        "kind": _STRATEGY_KINDS[type(strat)],
        "period": strat.schedule.period,
        "duration": strat.schedule.duration,
        "phase": strat.schedule.phase,
    }


def _strategy_from_dict(d: Mapping[str, Any]) -> Strategy:
    kind = d.get("kind")
    if kind == "hysteresis":
        return Hysteresis(MoistureBand(float(d["low_lim"]), float(d["upper_lim"])))
    if kind in ("timed_program", "farmer_schedule"):
        sched = TimedSchedule(int(d["period"]), int(d["duration"]), int(d.get("phase", 0)))
        return TimedProgram(sched) if kind == "timed_program" else FarmerSchedule(sched)
    raise ConfigurationError(f"unknown strategy kind {kind!r}")


def scenario_to_dict(config: ScenarioConfig) -> dict[str, Any]:
    return {
        "greenhouses": [
            {
                "id": gh.id,
                "lines": gh.lines,
                "motes": list(gh.motes),
                "actuator": gh.actuator,
                "plant": {
                    "name": gh.plant.name,
                    "uptake_rate_day": gh.plant.uptake_rate_day,
                    "uptake_rate_night": gh.plant.uptake_rate_night,
                },
                "flow_rate": gh.flow_rate,
                "initial_moisture": gh.initial_moisture,
            }
            for gh in config.greenhouses
        ],
        "gateways": [
            {"id": gw.id, "motes": list(gw.motes), "actuators": list(gw.actuators)}
            for gw in config.gateways
        ],
        "strategies": {gid: _strategy_to_dict(s) for gid, s in config.strategies.items()},
        "ambient": {
            "day_temp": config.ambient.day_temp,
            "night_temp": config.ambient.night_temp,
            "day_start": config.ambient.day_start,
            "day_length": config.ambient.day_length,
        },
        "link": {
            "loss_probability": config.link.loss_probability,
            "latency_min": config.link.latency_min,
            "latency_max": config.link.latency_max,
        },
        "soil": {
            "infil_rate": config.soil.infil_rate,
            "eta_min": config.soil.eta_min,
            "m_knee": config.soil.m_knee,
            "noise_amplitude": config.soil.noise_amplitude,
        },
        "duration": config.duration,
        "seed": config.seed,
        "mode": config.mode.value,
        "sampling_period": config.sampling_period,
        "physics_tick": config.physics_tick,
    }


def scenario_from_dict(d: Mapping[str, Any]) -> ScenarioConfig:
    try:
        greenhouses = tuple(
            GreenhouseConfig(
                id=str(g["id"]),
                lines=int(g["lines"]),
                motes=tuple(int(m) for m in g["motes"]),
                actuator=int(g["actuator"]),
                plant=PlantProfile(
                    name=str(g["plant"]["name"]),
                    uptake_rate_day=float(g["plant"]["uptake_rate_day"]),
                    uptake_rate_night=float(g["plant"]["uptake_rate_night"]),
                ),
                flow_rate=float(g["flow_rate"]),
                initial_moisture=float(g.get("initial_moisture", INITIAL_MOISTURE_DEFAULT)),
            )
            for g in d["greenhouses"]
        )
        gateways = tuple(
            GatewayConfig(
                id=int(g["id"]),
                motes=tuple(int(m) for m in g["motes"]),
                actuators=tuple(int(a) for a in g["actuators"]),
            )
            for g in d["gateways"]
        )
        amb = d.get("ambient", {})
        link = d.get("link", {})
        soil = d.get("soil", {})
        return ScenarioConfig(
            greenhouses=greenhouses,
            gateways=gateways,
            strategies={str(k): _strategy_from_dict(v) for k, v in d["strategies"].items()},
            duration=int(d["duration"]),
            seed=int(d["seed"]),
            ambient=AmbientCycle(
                day_temp=float(amb.get("day_temp", 36.0)),
                night_temp=float(amb.get("night_temp", 30.0)),
                day_start=int(amb.get("day_start", 21600)),
                day_length=int(amb.get("day_length", 43200)),
            ),
            link=LinkModel(
                loss_probability=float(link.get("loss_probability", 0.05)),
                latency_min=float(link.get("latency_min", 0.05)),
                latency_max=float(link.get("latency_max", 0.5)),
            ),
            soil=SoilParams(
                infil_rate=float(soil.get("infil_rate", INFIL_RATE_DEFAULT)),
                eta_min=float(soil.get("eta_min", ETA_MIN_DEFAULT)),
                m_knee=float(soil.get("m_knee", M_KNEE_DEFAULT)),
                noise_amplitude=float(soil.get("noise_amplitude", NOISE_AMPLITUDE_DEFAULT)),
            ),
            mode=EdgeMode(d.get("mode", "edge_only")),
            sampling_period=int(d.get("sampling_period", SAMPLING_PERIOD_DEFAULT)),
            physics_tick=int(d.get("physics_tick", PHYSICS_TICK_DEFAULT)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"malformed scenario: {exc}") from exc


def scenario_to_json(config: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(config), indent=2) + "\n"


def scenario_from_json(text: str) -> ScenarioConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("scenario root must be an object")
    return scenario_from_dict(data)


def load_scenario(path: Any) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_json(fh.read())
