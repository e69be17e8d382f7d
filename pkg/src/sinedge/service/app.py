"""HTTP service wrapping one edge node, plus the live simulation driver.

The service exposes the operator surface the browser console talks to:
status, series queries, band and mode changes, manual valve overrides and a
live metrics summary.  In serve mode a background thread paces the
simulation against the wall clock at a configurable time scale; request
handlers and the driver share one lock, so every mutation of edge state is
serialized exactly as it would be on a single-core edge box.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..control import ModeConflictError
from ..domain import ControlMode, ScenarioConfig, MoistureBand, ValveAction
from ..edge import EdgeNode, UnknownGreenhouseError
from ..metrics import summarize_store
from ..netsim import Simulation
from . import schemas


@dataclass
class ServiceContext:
    """Everything a running service needs, bundled for the route closures."""

    config: ScenarioConfig
    edge: EdgeNode
    sim: Optional[Simulation] = None
    lock: threading.RLock = field(default_factory=threading.RLock)
    clock: Callable[[], float] = lambda: 0.0
    driver: Optional["LiveSimDriver"] = None


class LiveSimDriver(threading.Thread):
    """Advances the simulation so one wall second equals `time_scale`
    simulated seconds, until the scenario duration is exhausted."""

    def __init__(self, ctx: ServiceContext, time_scale: float = 60.0, poll: float = 0.02):
        super().__init__(daemon=True, name="live-sim-driver")
        if time_scale <= 0:
            raise ValueError("time_scale must be positive")
        self.ctx = ctx
        self.time_scale = time_scale
        self.poll = poll
        self._halt = threading.Event()
        self._sim_now = 0.0
        self._started_wall = 0.0

    def sim_now(self) -> float:
        return self._sim_now

    def run(self) -> None:
        sim = self.ctx.sim
        assert sim is not None
        self._started_wall = time.monotonic()
        duration = float(sim.config.duration)
        while not self._halt.is_set():
            elapsed = time.monotonic() - self._started_wall
            target = min(elapsed * self.time_scale, duration)
            with self.ctx.lock:
                sim.step_until(target)
                self._sim_now = target
            if target >= duration:
                # Drain in-flight messages that land past the end of the
                # run, then seal the log; the clock parks at the duration.
                with self.ctx.lock:
                    sim.step_until(math.inf)
                    sim.finalize()
                    self._sim_now = duration
                return
            time.sleep(self.poll)

    def stop(self) -> None:
        self._halt.set()


def create_app(ctx: ServiceContext, console_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="sinedge edge node", version="0.1.0")

    @app.exception_handler(ModeConflictError)
    async def _mode_conflict(_request, exc: ModeConflictError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(UnknownGreenhouseError)
    async def _unknown_greenhouse(_request, exc: UnknownGreenhouseError):
        return JSONResponse(status_code=404, content={"detail": f"unknown greenhouse {exc}"})

    @app.get("/status", response_model=schemas.StatusResponse)
    def status() -> schemas.StatusResponse:
        with ctx.lock:
            now = ctx.clock()
            rows = ctx.edge.live_status(now)
            return schemas.StatusResponse(
                now=now,
                edge_mode=ctx.config.mode.value,
                egress_records=ctx.edge.egress_counter,
                greenhouses=[schemas.GreenhouseStatus(**row) for row in rows],
            )

    @app.get("/greenhouses/{gid}/series", response_model=schemas.SeriesResponse)
    def series(
        gid: str,
        metric: str = Query(default="moisture"),
        t_from: float = Query(default=0.0, alias="from"),
        t_to: Optional[float] = Query(default=None, alias="to"),
    ) -> schemas.SeriesResponse:
        with ctx.lock:
            upper = ctx.clock() if t_to is None else t_to
            try:
                records = ctx.edge.query_series(gid, t_from, upper, metric)
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            return schemas.SeriesResponse(
                greenhouse=gid, metric=metric, t_from=t_from, t_to=upper, records=records,
            )

    @app.put("/greenhouses/{gid}/band", response_model=schemas.OkResponse)
    def put_band(gid: str, body: schemas.BandBody) -> schemas.OkResponse:
        with ctx.lock:
            try:
                ctx.edge.set_band(gid, MoistureBand(body.low_lim, body.upper_lim), ctx.clock())
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            return schemas.OkResponse()

    @app.put("/greenhouses/{gid}/mode", response_model=schemas.OkResponse)
    def put_mode(gid: str, body: schemas.ModeBody) -> schemas.OkResponse:
        with ctx.lock:
            ctx.edge.set_mode(gid, ControlMode(body.mode), ctx.clock())
            return schemas.OkResponse()

    @app.post("/greenhouses/{gid}/valve", response_model=schemas.CommandAck)
    def post_valve(gid: str, body: schemas.ValveBody) -> schemas.CommandAck:
        with ctx.lock:
            command = ctx.edge.manual_valve(gid, ValveAction(body.action), ctx.clock())
            return schemas.CommandAck(
                greenhouse=gid, action=command.action.value,
                origin=command.origin.value, issued_at=command.issued_at,
            )

    @app.get("/metrics/summary", response_model=schemas.SummaryResponse)
    def metrics_summary(
        warm_up: float = Query(default=0.0, ge=0.0),
        band_tolerance: float = Query(default=0.0, ge=0.0),
    ) -> schemas.SummaryResponse:
        with ctx.lock:
            now = ctx.clock()
            rows = summarize_store(ctx.edge.store, ctx.config, now,
                                   warm_up=warm_up, band_tolerance=band_tolerance)
            return schemas.SummaryResponse(now=now, rows=[
                schemas.SummaryRow(
                    greenhouse=r.greenhouse, mean=r.mean, stddev=r.stddev,
                    amplitude=r.amplitude, time_in_band=r.time_in_band,
                    valve_open_hours=r.valve_open_hours, water_liters=r.water_liters,
                    commands=r.commands, drops=r.drops,
                ) for r in rows
            ])

    if console_dir is not None and Path(console_dir).is_dir():
        app.mount("/console", StaticFiles(directory=str(console_dir), html=True),
                  name="console")

    return app


def build_live_service(
    config: ScenarioConfig,
    time_scale: float = 60.0,
    store_path: Optional[Path] = None,
    console_dir: Optional[Path] = None,
) -> tuple[FastAPI, ServiceContext]:
    """Wire scenario, simulator, edge node and HTTP app for serve mode."""

    from ..store import TimeSeriesStore

    sim = Simulation(config)
    edge = EdgeNode(config, store=TimeSeriesStore(store_path))
    sim.bind_hooks(edge)
    ctx = ServiceContext(config=config, edge=edge, sim=sim)
    driver = LiveSimDriver(ctx, time_scale=time_scale)
    ctx.driver = driver
    ctx.clock = driver.sim_now
    app = create_app(ctx, console_dir=console_dir)
    return app, ctx
