"""Shared fixtures: each full-horizon closed-loop run executes once per session."""

import time
from dataclasses import replace

import pytest

from etsmc.config import build_config
from etsmc.sim import (resolve_regulation, run_event_triggered,
                       run_time_triggered)


@pytest.fixture(scope="session")
def default_cfg():
    return build_config({})


@pytest.fixture(scope="session")
def nominal_run(default_cfg):
    """(traj, log, metrics, elapsed_seconds) for the default startup case."""
    t0 = time.perf_counter()
    traj, log, metrics = run_event_triggered(default_cfg)
    elapsed = time.perf_counter() - t0
    return traj, log, metrics, elapsed


@pytest.fixture(scope="session")
def disturbed_run(default_cfg):
    cfg = replace(default_cfg, scenario="disturbed")
    return run_event_triggered(cfg)


@pytest.fixture(scope="session")
def nominal_tt(default_cfg):
    return run_time_triggered(default_cfg)


@pytest.fixture(scope="session")
def disturbed_tt(default_cfg):
    cfg = replace(default_cfg, scenario="disturbed")
    return run_time_triggered(cfg)


@pytest.fixture(scope="session")
def regulate_runs(default_cfg):
    """Setpoint runs keyed by coolant-feed setpoint in kelvin."""
    out = {}
    for setpoint in (300.0, 400.0, 500.0):
        cfg = replace(default_cfg, scenario="regulate",
                      setpoint_kelvin=setpoint)
        cfg = resolve_regulation(cfg)
        out[setpoint] = (cfg,) + run_event_triggered(cfg)
    return out


@pytest.fixture(scope="session")
def flipped_run(default_cfg):
    """Falsification control: actuation sign deliberately inverted."""
    return run_event_triggered(default_cfg, flip_control_sign=True)
