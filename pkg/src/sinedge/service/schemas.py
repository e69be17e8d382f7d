"""Request and response bodies for the edge HTTP API."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class BandBody(BaseModel):
    low_lim: float = Field(ge=0.0, le=100.0)
    upper_lim: float = Field(ge=0.0, le=100.0)

    @model_validator(mode="after")
    def _ordered(self) -> "BandBody":
        if not self.low_lim < self.upper_lim:
            raise ValueError("band inverted: low_lim must be strictly below upper_lim")
        return self


class ModeBody(BaseModel):
    mode: Literal["auto", "manual"]


class ValveBody(BaseModel):
    action: Literal["open", "close"]


class BandOut(BaseModel):
    low_lim: float
    upper_lim: float


class GreenhouseStatus(BaseModel):
    greenhouse: str
    mode: str
    valve_belief: str
    aggregate: Optional[float]
    aggregate_stale: bool
    band: Optional[BandOut]
    strategy: str
    samples_stored: int
    first_sample_at: Optional[float]
    last_sample_at: Optional[float]


class StatusResponse(BaseModel):
    now: float
    edge_mode: str
    egress_records: int
    greenhouses: list[GreenhouseStatus]


class SeriesResponse(BaseModel):
    greenhouse: str
    metric: str
    t_from: float
    t_to: float
    records: list[dict]


class CommandAck(BaseModel):
    greenhouse: str
    action: str
    origin: str
    issued_at: float


class SummaryRow(BaseModel):
    greenhouse: str
    mean: float
    stddev: float
    amplitude: float
    time_in_band: float
    valve_open_hours: float
    water_liters: float
    commands: int
    drops: int


class SummaryResponse(BaseModel):
    now: float
    rows: list[SummaryRow]


class OkResponse(BaseModel):
    ok: bool = True
