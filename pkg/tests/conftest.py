"""Shared fixtures.

The edge-isolation fixture is deliberately autouse: no test anywhere in the
suite may leave an EdgeOnly boundary guard with a nonzero egress tally.
"""

from __future__ import annotations

import time
from pathlib import Path

import pytest

from sinedge.cli import run_with_edge
from sinedge.domain import EdgeMode, default_scenario
from sinedge.edge import EdgeBoundaryGuard

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture(autouse=True)
def edge_isolation():
    """After every test, every EdgeOnly guard must sit at zero egress."""
    yield
    for guard in EdgeBoundaryGuard.live_instances():
        if guard.mode is EdgeMode.EDGE_ONLY:
            assert guard.egress_counter == 0, (
                "EdgeOnly boundary guard counted records leaving the edge"
            )


class DefaultRun:
    """One completed run of the built-in pilot scenario, shared suite-wide."""

    def __init__(self):
        self.config = default_scenario()
        started = time.perf_counter()
        self.log, self.edge, self.sim = run_with_edge(self.config)
        self.elapsed = time.perf_counter() - started


@pytest.fixture(scope="session")
def default_run() -> DefaultRun:
    return DefaultRun()


@pytest.fixture(scope="session")
def scenario_dir() -> Path:
    return SCENARIO_DIR
