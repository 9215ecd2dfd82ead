import math
from dataclasses import replace

import numpy as np
import pytest

from etsmc.config import build_config
from etsmc.controller import (SlidingParams, error_state,
                              event_control_update)
from etsmc.plant import (DimlessParams, DimlessState, Disturbance,
                         InvalidParameterError)
from etsmc.sim import (ReachabilityResult, Trajectory, check_invariants,
                       resolve_regulation, rk4_step, run_event_triggered,
                       run_time_triggered, verify_reachability,
                       write_trajectory_csv)
from etsmc.trigger import should_trigger

NOMINAL = DimlessParams(da=0.078, gamma=20.0, b_rise=8.0, beta=0.3, x2c0=0.0)
LINEAR = DimlessParams(da=1e-300, gamma=20.0, b_rise=8.0, beta=0.3, x2c0=0.0)


def small_cfg(**overrides):
    cfg = build_config({})
    return replace(cfg, **overrides)


class TestSimConfig:
    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            small_cfg(h=0.0)
        with pytest.raises(InvalidParameterError):
            small_cfg(t_end=0.005)  # below 10*h
        with pytest.raises(InvalidParameterError):
            small_cfg(scenario="warp")
        with pytest.raises(InvalidParameterError):
            small_cfg(scenario="regulate")  # setpoint missing

    def test_step_count(self):
        assert small_cfg().step_count() == 50000
        assert small_cfg(h=0.3, t_end=50.0).step_count() == 167

    def test_disturbance_selection(self):
        assert small_cfg().disturbance().eval(7.0) == (0.0, 0.0)
        d = small_cfg(scenario="disturbed").disturbance()
        t_peak = 0.5 * math.pi / 0.1
        assert d.d1(t_peak) == pytest.approx(0.026, rel=1e-12)
        assert d.d2(t_peak) == pytest.approx(0.037, rel=1e-12)


class TestRegulationResolution:
    def test_setpoint_conversion(self):
        cfg = small_cfg(scenario="regulate", setpoint_kelvin=400.0)
        rcfg = resolve_regulation(cfg)
        # gamma*(400-300)/300 = 20/3
        assert rcfg.reference.x2ss == pytest.approx(20.0 / 3.0, abs=1e-12)
        assert rcfg.reference.x1_const == pytest.approx(
            0.920484892097301, abs=1e-12)

    def test_composition_reference_sits_on_the_nullcline(self):
        from etsmc.plant import composition_nullcline
        for setpoint in (300.0, 400.0, 500.0):
            cfg = small_cfg(scenario="regulate", setpoint_kelvin=setpoint)
            rcfg = resolve_regulation(cfg)
            assert rcfg.reference.x1_const == composition_nullcline(
                rcfg.reference.x2ss, rcfg.plant)

    def test_identity_outside_regulate(self):
        cfg = small_cfg()
        assert resolve_regulation(cfg) is cfg


class TestRk4:
    def test_linear_decay_single_step(self):
        # with a vanishing reaction term x1' = -x1, so one step from 1.0
        # must be exp(-h) up to the local O(h^5) defect
        nxt = rk4_step(DimlessState(1.0, 0.0), 0.0, 0.0, 0.1, LINEAR,
                       Disturbance.zero())
        assert nxt.x1 == pytest.approx(math.exp(-0.1), abs=1e-7)
        assert abs(nxt.x2) < 1e-290  # only the vanishing reaction leak

    def test_fourth_order_convergence(self):
        def integrate(n):
            h = 1.0 / n
            x = DimlessState(1.0, 0.0)
            for i in range(n):
                x = rk4_step(x, 0.0, i * h, h, LINEAR, Disturbance.zero())
            return abs(x.x1 - math.exp(-1.0))

        order = math.log2(integrate(16) / integrate(32))
        assert order >= 3.9

    def test_zoh_constant_input_exact_linear_response(self):
        # x2' = -(1+beta) x2 + beta u with u frozen across stages; compare
        # with the exact first-order step response
        a, u = 1.3, 2.0
        x = DimlessState(0.0, 0.0)
        h, n = 0.01, 200
        for i in range(n):
            x = rk4_step(x, u, i * h, h, LINEAR, Disturbance.zero())
        exact = (0.3 * u / a) * (1.0 - math.exp(-a * n * h))
        assert x.x2 == pytest.approx(exact, abs=1e-10)

    def test_rejects_nonpositive_step(self):
        with pytest.raises(InvalidParameterError):
            rk4_step(DimlessState(0.0, 0.0), 0.0, 0.0, 0.0, NOMINAL,
                     Disturbance.zero())


class TestLoopEquivalence:
    def test_matches_public_operations_bitwise(self):
        # moderate gain so the trigger does not fire at every point
        cfg = small_cfg(sliding=SlidingParams(1.0, 2.0, 0.5),
                        t_end=0.5)
        traj, log, _ = run_event_triggered(cfg)
        p, sp, tp, r = cfg.plant, cfg.sliding, cfg.trigger, cfg.reference
        d = cfg.disturbance()
        h = cfg.h
        x = cfg.x0
        u = event_control_update(x, 0.0, p, d, r, sp).u
        assert traj.u[0] == u and traj.event[0]
        for i in range(1, cfg.step_count() + 1):
            t = i * h
            x = rk4_step(x, u, t - h, h, p, d)
            e = error_state(x, u, t, p, d, r)
            fired = should_trigger(e, t, tp)
            if fired:
                u = event_control_update(x, t, p, d, r, sp).u
            assert traj.x1[i] == x.x1
            assert traj.x2[i] == x.x2
            assert traj.u[i] == u
            assert bool(traj.event[i]) == fired
        assert log.instants == [i * h for i in np.flatnonzero(traj.event)]

    def test_time_triggered_fires_everywhere(self):
        cfg = small_cfg(t_end=0.2)
        traj, metrics = run_time_triggered(cfg)
        assert traj.event.all()
        assert metrics.event_count == cfg.step_count() + 1
        assert metrics.min_gap == pytest.approx(cfg.h)


class TestRunOutputs:
    def test_series_shapes_and_flags(self):
        cfg = small_cfg(t_end=1.0)
        traj, log, metrics = run_event_triggered(cfg)
        n = cfg.step_count() + 1
        for name in ("t", "x1", "x2", "x1ref", "x2ref", "u", "sigma",
                     "sigma_dot", "delta", "event", "v", "band", "eps"):
            assert len(getattr(traj, name)) == n
        assert traj.event[0]
        assert log.instants[0] == 0.0
        assert len(log.bound_at_event) == len(log.instants)
        assert all(b > 0.0 for b in log.bound_at_event)
        assert np.all(traj.v == 0.5 * traj.sigma ** 2)

    def test_determinism(self):
        cfg = small_cfg(t_end=1.0)
        a = run_event_triggered(cfg)[0]
        b = run_event_triggered(cfg)[0]
        for name in ("x1", "x2", "u", "sigma", "delta"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_physical_range_warning(self):
        cfg = small_cfg(x0=DimlessState(1.2, 0.0), t_end=0.1)
        with pytest.warns(RuntimeWarning, match="exceeds feed conversion"):
            run_event_triggered(cfg)


def synthetic_traj(sigma, sigma_dot, band=0.01):
    n = len(sigma)
    sigma = np.asarray(sigma, dtype=float)
    sigma_dot = np.asarray(sigma_dot, dtype=float)
    event = np.zeros(n, dtype=bool)
    event[0] = True
    return Trajectory(
        t=np.linspace(0.0, n - 1.0, n), x1=np.zeros(n), x2=np.zeros(n),
        x1ref=np.zeros(n), x2ref=np.zeros(n), u=np.zeros(n),
        sigma=sigma, sigma_dot=sigma_dot, delta=np.full(n, -1.0),
        event=event, v=0.5 * sigma * sigma, band=np.full(n, band),
        eps=np.zeros(n))


class TestReachability:
    def test_decay_rate(self):
        traj = synthetic_traj([2.0, 1.0, 0.5], [-1.0, -0.6, -0.25])
        res = verify_reachability(traj)
        assert res.applicable
        # rates are (1.0, 0.6, 0.25); the slowest is 0.25
        assert res.eta_hat == pytest.approx(0.25)
        assert res.violations == []

    def test_flags_violations(self):
        traj = synthetic_traj([2.0, 1.0, 0.5], [-1.0, 0.3, -0.25])
        res = verify_reachability(traj)
        assert res.violations == [1]
        assert res.eta_hat < 0.0

    def test_not_applicable_inside_band(self):
        traj = synthetic_traj([0.001, -0.002], [1.0, 1.0], band=0.01)
        res = verify_reachability(traj)
        assert res == ReachabilityResult(applicable=False, eta_hat=None,
                                         violations=[])


class TestMetrics:
    def test_hand_check_on_short_run(self):
        cfg = small_cfg(t_end=1.0)
        traj, log, metrics = run_event_triggered(cfg)
        assert metrics.step_count == 1000
        assert metrics.event_count == len(log.instants)
        assert metrics.event_ratio == metrics.event_count / 1000
        tail = traj.t >= 0.8
        assert metrics.steady_band_x1[0] == traj.x1[tail].min()
        assert metrics.steady_band_x1[1] == traj.x1[tail].max()
        e2 = traj.x2 - traj.x2ref
        assert metrics.tracking_rmse == pytest.approx(
            math.sqrt(float(np.mean(e2 * e2))))
        assert metrics.max_discretization_error == traj.eps.max()
        assert isinstance(metrics.as_dict(), dict)


@pytest.fixture(scope="module")
def short_run():
    cfg = small_cfg(t_end=1.0)
    traj, log, _ = run_event_triggered(cfg)
    return cfg, traj, log


@pytest.fixture(scope="module")
def sparse_run():
    """Smaller switching gain: the trigger then skips most grid points."""
    cfg = small_cfg(sliding=SlidingParams(1.0, 2.0, 0.5), t_end=1.0)
    traj, log, _ = run_event_triggered(cfg)
    assert not traj.event.all()
    return cfg, traj, log


class TestInvariants:
    def test_clean_short_run_passes(self, short_run):
        cfg, traj, log = short_run
        assert check_invariants(traj, log, cfg) == []

    def test_detects_mid_interval_control_change(self, sparse_run):
        cfg, traj, log = sparse_run
        bad = replace_field(traj, "u")
        idx = int(np.flatnonzero(~traj.event)[0])
        bad.u[idx] += 1.0
        assert "control-piecewise-constant" in check_invariants(bad, log, cfg)

    def test_detects_lyapunov_mismatch(self, short_run):
        cfg, traj, log = short_run
        bad = replace_field(traj, "v")
        bad.v[5] += 1e-9
        assert "lyapunov-consistency" in check_invariants(bad, log, cfg)

    def test_detects_event_log_drift(self, short_run):
        cfg, traj, log = short_run
        from etsmc.trigger import EventLog
        clipped = EventLog(instants=log.instants[:-1],
                           gaps=log.gaps[:-1],
                           bound_at_event=log.bound_at_event[:-1],
                           delta_at_event=log.delta_at_event[:-1])
        assert "event-cross-consistency" in check_invariants(
            traj, clipped, cfg)

    def test_detects_missed_fire(self, sparse_run):
        cfg, traj, log = sparse_run
        bad = replace_field(traj, "delta")
        idx = int(np.flatnonzero(~traj.event)[0])
        bad.delta[idx] = 0.5
        assert "delta-log-consistency" in check_invariants(bad, log, cfg)


def replace_field(traj, name):
    kwargs = {f: getattr(traj, f).copy() for f in (
        "t", "x1", "x2", "x1ref", "x2ref", "u", "sigma", "sigma_dot",
        "delta", "event", "v", "band", "eps")}
    return Trajectory(**kwargs)


class TestTrajectoryCsv:
    def test_roundtrip_exact(self, tmp_path):
        cfg = small_cfg(t_end=0.05)
        traj, _, _ = run_event_triggered(cfg)
        path = tmp_path / "trajectory.csv"
        write_trajectory_csv(traj, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,x1,x2,x1ref,x2ref,u,sigma,delta,event"
        assert len(lines) == len(traj.t) + 1
        cols = list(zip(*(ln.split(",") for ln in lines[1:])))
        for j, name in enumerate(("t", "x1", "x2", "x1ref", "x2ref", "u",
                                  "sigma", "delta")):
            back = np.array([float(v) for v in cols[j]])
            assert np.array_equal(back, getattr(traj, name))
        assert [int(v) for v in cols[8]] == list(traj.event.astype(int))
