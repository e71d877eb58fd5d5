"""Shared long runs for the acceptance suite and a per-criterion summary."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from polywell.cli import RunConfig, preset, validate
from polywell.core import PhysicalParams
from polywell.packets import make_packet
from polywell.potentials import evaluate
from polywell.propagator import absorbing_margin, run

ACCEPTANCE_LINES: list[str] = []


def record(criterion: int, label: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {criterion} [{'PASS' if ok else 'FAIL'}] {label}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def simulate(cfg: RunConfig, times, *, contamination="ignore", absorb=None):
    cfg = validate(cfg)
    g = cfg.grid
    v = evaluate(cfg.well_spec, g)
    if absorb is not None:
        v = v + absorbing_margin(g, *absorb)
    res = run(make_packet(cfg.packet_spec, g), v, PhysicalParams(cfg.mass), cfg.tmax, times,
              contamination=contamination)
    return cfg, res


def _scattering_run(figure: int, **over):
    """A preset at the acceptance resolution, tracked every 10 time units to t=1500."""
    cfg = replace(preset(figure), dx=0.04, dt=0.05, xmin=-400.0, xmax=400.0, tmax=1500.0,
                  cadence=10.0, **over)
    cfg = validate(cfg)
    return simulate(cfg, cfg.cadence_times())


@pytest.fixture(scope="session")
def fig1_run():
    return _scattering_run(1)


@pytest.fixture(scope="session")
def fig2_run():
    return _scattering_run(2)


@pytest.fixture(scope="session")
def q1_run():
    return _scattering_run(1, q=1.0)


@pytest.fixture(scope="session")
def fig7_run():
    return _scattering_run(7)


@pytest.fixture(scope="session")
def long_fig1_run():
    """Preset 1 to t=5000 (1e5 steps) on a domain wide enough to stay clean."""
    cfg = replace(preset(1), dx=0.04, dt=0.05, xmin=-1100.0, xmax=1100.0, cadence=500.0)
    cfg = validate(cfg)
    return simulate(cfg, cfg.cadence_times(), contamination="warn")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
