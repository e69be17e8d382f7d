"""Command line interface.

Batch commands (validate, run, compare) drive the simulator directly and
write deterministic artifacts; serve hosts the edge HTTP service with the
simulation paced against the wall clock; the remaining commands (status,
set-band, set-mode, valve, series) are thin HTTP clients for a running
service.

Every flag can also be supplied through an environment variable with the
SINEDGE_ prefix (e.g. SINEDGE_SCENARIO, SINEDGE_SEED, SINEDGE_OUT,
SINEDGE_LISTEN, SINEDGE_TIME_SCALE, SINEDGE_WARM_UP, SINEDGE_SERVER);
explicit flags win.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import Any, Optional

import httpx

from . import metrics as mx
from .control import aggregate
from .domain import (
    ConfigurationError,
    FarmerSchedule,
    Hysteresis,
    MoistureSample,
    ScenarioConfig,
    TimedProgram,
    default_scenario,
    load_scenario,
    scenario_to_json,
    validate_scenario,
)
from .edge import EdgeNode
from .netsim import Simulation
from .runlog import RunLog
from .store import TimeSeriesStore

SERIES_CSV_HEADER = "t,true_moisture,aggregate,valve,command_events"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2


def _env(name: str, default: Optional[str] = None) -> Optional[str]:
    return os.environ.get(f"SINEDGE_{name}", default)


def _load_config(args: argparse.Namespace) -> ScenarioConfig:
    if args.scenario:
        config = load_scenario(args.scenario)
    else:
        config = default_scenario()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _resolve_warm_up(args: argparse.Namespace, config: ScenarioConfig) -> float:
    """Warm-up to exclude from summaries.  An explicit flag or environment
    value is taken as-is; the built-in default assumes a multi-day run and
    drops to zero when the scenario is shorter than the warm-up itself."""
    if args.warm_up is not None:
        return args.warm_up
    env = _env("WARM_UP")
    if env is not None:
        return float(env)
    return mx.WARM_UP_DEFAULT if config.duration > mx.WARM_UP_DEFAULT else 0.0


def run_with_edge(config: ScenarioConfig, store_path: Optional[Path] = None):
    """Wire simulator and edge node, run to completion."""
    sim = Simulation(config)
    edge = EdgeNode(config, store=TimeSeriesStore(store_path))
    sim.bind_hooks(edge)
    log = sim.run()
    edge.store.close()
    return log, edge, sim


def _series_csv(log: RunLog, config: ScenarioConfig, greenhouse: str) -> str:
    """Per-tick trace: true state, the edge's aggregate view, valve, commands."""
    staleness = 5 * config.sampling_period
    last: dict[int, MoistureSample] = {}
    lines = [SERIES_CSV_HEADER]
    pending_commands = 0
    for rec in log.records:
        if rec.get("greenhouse") != greenhouse:
            continue
        kind = rec["kind"]
        if kind == "sample_delivered":
            last[rec["mote"]] = MoistureSample(
                mote=rec["mote"], greenhouse=greenhouse,
                moisture=rec["moisture"], sampled_at=rec["sampled_at"],
            )
        elif kind == "command":
            pending_commands += 1
        elif kind == "physics":
            t = rec["t"]
            agg = ""
            if last:
                agg = f"{aggregate(list(last.values()), t, staleness).value:.6f}"
            lines.append(
                f"{t:.6f},{rec['moisture']:.6f},{agg},{int(rec['valve'])},{pending_commands}"
            )
            pending_commands = 0
    return "\n".join(lines) + "\n"


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
    except (ConfigurationError, OSError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = validate_scenario(config)
    if not report.ok:
        for violation in report.violations:
            print(f"violation: {violation}", file=sys.stderr)
        return EXIT_INVALID
    print("scenario ok")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
    except (ConfigurationError, OSError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = validate_scenario(config)
    if not report.ok:
        for violation in report.violations:
            print(f"violation: {violation}", file=sys.stderr)
        return EXIT_INVALID

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    store_path = out_dir / "edge_store.jsonl"
    if store_path.exists():
        store_path.unlink()  # append-only store: start each run from scratch
    log, _edge, _sim = run_with_edge(config, store_path)

    log.write_jsonl(out_dir / "runlog.jsonl")
    for gh in config.greenhouses:
        (out_dir / f"series_{gh.id}.csv").write_text(
            _series_csv(log, config, gh.id), encoding="utf-8")
    try:
        summaries = mx.summarize(log, config, warm_up=_resolve_warm_up(args, config))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    (out_dir / "summary.csv").write_text(mx.summaries_to_csv(summaries), encoding="utf-8")

    for s in summaries:
        print(f"{s.greenhouse}: open {s.valve_open_hours:.3f} h, "
              f"water {s.water_liters:.1f} L, mean {s.mean:.2f}%, "
              f"amplitude {s.amplitude:.2f}%")
    print(f"wrote {out_dir}/runlog.jsonl, edge_store.jsonl, "
          f"{len(config.greenhouses)} series CSVs, summary.csv")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
    except (ConfigurationError, OSError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = validate_scenario(config)
    if not report.ok:
        for violation in report.violations:
            print(f"violation: {violation}", file=sys.stderr)
        return EXIT_INVALID

    timed = [gh.id for gh in config.greenhouses
             if isinstance(config.strategies[gh.id], (TimedProgram, FarmerSchedule))]
    banded = [gh.id for gh in config.greenhouses
              if isinstance(config.strategies[gh.id], Hysteresis)]
    if not timed or not banded:
        print("compare needs at least two greenhouses with distinct strategies "
              "(one timed baseline, one hysteresis)", file=sys.stderr)
        return EXIT_INVALID

    log, _edge, _sim = run_with_edge(config)
    try:
        rows = mx.summarize(log, config, warm_up=_resolve_warm_up(args, config))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    summaries = {s.greenhouse: s for s in rows}
    rep = mx.compare(summaries[timed[0]], summaries[banded[0]])

    print(f"baseline   {rep.a.greenhouse}: open {rep.a.valve_open_hours:.3f} h, "
          f"water {rep.a.water_liters:.1f} L, amplitude {rep.a.amplitude:.2f}%")
    print(f"controlled {rep.b.greenhouse}: open {rep.b.valve_open_hours:.3f} h, "
          f"water {rep.b.water_liters:.1f} L, amplitude {rep.b.amplitude:.2f}%")
    print(f"water saving: {rep.water_saving * 100.0:.1f}%")
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        payload = {
            "a": dataclasses.asdict(rep.a),
            "b": dataclasses.asdict(rep.b),
            "ratios": rep.ratios,
            "deltas": rep.deltas,
            "water_saving": rep.water_saving,
        }
        (out_dir / "comparison.json").write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {out_dir}/comparison.json")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
    except (ConfigurationError, OSError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    report = validate_scenario(config)
    if not report.ok:
        for violation in report.violations:
            print(f"violation: {violation}", file=sys.stderr)
        return EXIT_INVALID

    from .service.app import build_live_service

    host, _, port_s = args.listen.rpartition(":")
    host = host or "127.0.0.1"
    try:
        port = int(port_s)
    except ValueError:
        print(f"bad --listen value {args.listen!r}; expected host:port", file=sys.stderr)
        return EXIT_INVALID

    console_dir = Path(args.console) if args.console else None
    store_path = Path(args.store) if args.store else None
    app, ctx = build_live_service(config, time_scale=args.time_scale,
                                  store_path=store_path, console_dir=console_dir)
    assert ctx.driver is not None
    ctx.driver.start()
    print(f"edge service on http://{host}:{port}  "
          f"(time scale {args.time_scale:g}x, scenario seed {config.seed})")
    import uvicorn
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        ctx.driver.stop()
        ctx.edge.store.close()
    return EXIT_OK


# -- thin HTTP client commands -------------------------------------------


def _client(args: argparse.Namespace) -> httpx.Client:
    return httpx.Client(base_url=args.server, timeout=10.0)


def _print_response(resp: httpx.Response) -> int:
    body: Any
    try:
        body = resp.json()
    except ValueError:
        body = resp.text
    print(json.dumps(body, indent=2) if isinstance(body, (dict, list)) else body)
    if resp.is_success:
        return EXIT_OK
    # the server rejected the request itself (bad band, unknown greenhouse,
    # mode conflict); distinguish that from transport/server failures
    return EXIT_INVALID if resp.status_code < 500 else EXIT_ERROR


def cmd_status(args: argparse.Namespace) -> int:
    with _client(args) as client:
        return _print_response(client.get("/status"))


def cmd_set_band(args: argparse.Namespace) -> int:
    with _client(args) as client:
        return _print_response(client.put(
            f"/greenhouses/{args.greenhouse}/band",
            json={"low_lim": args.low, "upper_lim": args.high},
        ))


def cmd_set_mode(args: argparse.Namespace) -> int:
    with _client(args) as client:
        return _print_response(client.put(
            f"/greenhouses/{args.greenhouse}/mode", json={"mode": args.mode},
        ))


def cmd_valve(args: argparse.Namespace) -> int:
    with _client(args) as client:
        return _print_response(client.post(
            f"/greenhouses/{args.greenhouse}/valve", json={"action": args.action},
        ))


def cmd_series(args: argparse.Namespace) -> int:
    params: dict[str, Any] = {"metric": args.metric, "from": args.t_from}
    if args.t_to is not None:
        params["to"] = args.t_to
    with _client(args) as client:
        return _print_response(client.get(
            f"/greenhouses/{args.greenhouse}/series", params=params,
        ))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinedge",
        description="Deterministic smart-irrigation simulator and edge control service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", default=_env("SCENARIO"),
                       help="scenario JSON file (default: built-in two-greenhouse pilot)")
        seed_env = _env("SEED")
        p.add_argument("--seed", type=int,
                       default=int(seed_env) if seed_env is not None else None,
                       help="override the scenario seed")

    p = sub.add_parser("validate", help="check a scenario file and report violations")
    add_scenario_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run a scenario and write runlog + CSV artifacts")
    add_scenario_flags(p)
    p.add_argument("--out", default=_env("OUT", "out"), help="output directory")
    p.add_argument("--warm-up", type=float, default=None,
                   help="seconds excluded from summary statistics "
                        "(default 21600, or 0 for runs shorter than that)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run one scenario and compare baseline vs banded control")
    add_scenario_flags(p)
    p.add_argument("--out", default=_env("OUT"), help="optional directory for comparison.json")
    p.add_argument("--warm-up", type=float, default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="host the edge HTTP service with a live simulation")
    add_scenario_flags(p)
    p.add_argument("--listen", default=_env("LISTEN", "127.0.0.1:8000"), help="host:port")
    p.add_argument("--time-scale", type=float,
                   default=float(_env("TIME_SCALE", "60")),
                   help="simulated seconds per wall second (default 60)")
    p.add_argument("--store", default=_env("STORE"),
                   help="edge store JSONL path (default: in-memory only)")
    p.add_argument("--console", default=_env("CONSOLE"),
                   help="directory with the built operator console to serve at /console")
    p.set_defaults(func=cmd_serve)

    def add_client_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--server", default=_env("SERVER", "http://127.0.0.1:8000"),
                       help="base URL of a running edge service")

    p = sub.add_parser("status", help="show live greenhouse status from a running service")
    add_client_flags(p)
    p.set_defaults(func=cmd_status)

    p = sub.add_parser("set-band", help="change a greenhouse moisture band")
    add_client_flags(p)
    p.add_argument("greenhouse")
    p.add_argument("low", type=float)
    p.add_argument("high", type=float)
    p.set_defaults(func=cmd_set_band)

    p = sub.add_parser("set-mode", help="switch a greenhouse between auto and manual")
    add_client_flags(p)
    p.add_argument("greenhouse")
    p.add_argument("mode", choices=["auto", "manual"])
    p.set_defaults(func=cmd_set_mode)

    p = sub.add_parser("valve", help="manual valve override (requires manual mode)")
    add_client_flags(p)
    p.add_argument("greenhouse")
    p.add_argument("action", choices=["open", "close"])
    p.set_defaults(func=cmd_valve)

    p = sub.add_parser("series", help="fetch a stored series from a running service")
    add_client_flags(p)
    p.add_argument("greenhouse")
    p.add_argument("--metric", default="moisture", choices=["moisture", "valve", "commands"])
    p.add_argument("--from", dest="t_from", type=float, default=0.0)
    p.add_argument("--to", dest="t_to", type=float, default=None)
    p.set_defaults(func=cmd_series)

    p = sub.add_parser("export-default", help="print the built-in pilot scenario as JSON")
    p.set_defaults(func=lambda _args: (print(scenario_to_json(default_scenario()), end=""), EXIT_OK)[1])

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
