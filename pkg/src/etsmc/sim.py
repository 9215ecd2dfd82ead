"""Closed-loop fixed-step integration, metrics and Lyapunov verification.

One run is one sequential loop over a uniform time grid.  Per grid point:
evaluate the tracking errors and the trigger margin with the currently held
control, recompute the held control if the margin is nonnegative (the first
computation at t = 0 is an event by definition), integrate one RK4 step with
the control frozen across stages, and record.  Identical configurations give
bit-identical outputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .controller import ReferenceSignal, SlidingParams
from .plant import (DimlessParams, DimlessState, Disturbance,
                    InvalidParameterError, PhysicalParams, SINGULAR_TOL,
                    SingularExponentError, composition_nullcline,
                    kelvin_to_x2, state_derivative)
from .trigger import (EventLog, TriggerParams, estimate_lipschitz, threshold,
                      zeno_bound)

SCENARIOS = ("nominal", "disturbed", "regulate")

X1_PHYSICAL_TOL = 0.1


class SimulationDivergedError(RuntimeError):
    """Raised when an accepted state stops being finite."""


@dataclass(frozen=True)
class SimConfig:
    """Fully resolved inputs of one closed-loop run."""

    plant: DimlessParams
    sliding: SlidingParams
    trigger: TriggerParams
    reference: ReferenceSignal
    h: float = 1e-3
    t_end: float = 50.0
    x0: DimlessState = DimlessState(0.0, 0.0)
    scenario: str = "nominal"
    d1_amp: float = 0.026
    d1_freq: float = 0.1
    d2_amp: float = 0.037
    d2_freq: float = 0.1
    setpoint_kelvin: Optional[float] = None
    tf0_kelvin: float = 300.0
    physical: Optional[PhysicalParams] = None

    def __post_init__(self) -> None:
        if not self.h > 0.0:
            raise InvalidParameterError("h must be positive")
        if not self.t_end >= 10.0 * self.h:
            raise InvalidParameterError("t_end must be at least 10*h")
        if self.scenario not in SCENARIOS:
            raise InvalidParameterError(f"unknown scenario {self.scenario!r}")
        if self.scenario == "regulate":
            if self.setpoint_kelvin is None:
                raise InvalidParameterError(
                    "regulate scenario requires setpoint_kelvin")
            if not self.tf0_kelvin > 0.0:
                raise InvalidParameterError("tf0_kelvin must be positive")

    def disturbance(self) -> Disturbance:
        if self.scenario == "disturbed":
            return Disturbance.sinusoidal(self.d1_amp, self.d1_freq,
                                          self.d2_amp, self.d2_freq)
        return Disturbance.zero()

    def step_count(self) -> int:
        return math.ceil(self.t_end / self.h - 1e-9)


def resolve_regulation(cfg: SimConfig) -> SimConfig:
    """Rebuild the reference for a regulate run from the kelvin setpoint.

    The temperature asymptote comes from the setpoint conversion; the
    composition reference is placed on the reaction nullcline at that
    temperature so that sliding (sigma = 0) does not trade temperature
    accuracy against an unreachable composition target.
    """
    if cfg.scenario != "regulate":
        return cfg
    x2ss = kelvin_to_x2(cfg.setpoint_kelvin, cfg.tf0_kelvin, cfg.plant.gamma)
    x1ref = composition_nullcline(x2ss, cfg.plant)
    ref = replace(cfg.reference, x1_const=x1ref, x2ss=x2ss)
    return replace(cfg, reference=ref)


@dataclass
class Trajectory:
    """Time-indexed records of one run; all series share one length."""

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    x1ref: np.ndarray
    x2ref: np.ndarray
    u: np.ndarray
    sigma: np.ndarray
    sigma_dot: np.ndarray
    delta: np.ndarray
    event: np.ndarray
    v: np.ndarray
    band: np.ndarray
    eps: np.ndarray  # discretization error norm ||x(t) - x(t_k)||


@dataclass(frozen=True)
class ReachabilityResult:
    """Outcome of the empirical reaching-inequality check."""

    applicable: bool
    eta_hat: Optional[float]
    violations: list[int]


@dataclass(frozen=True)
class Metrics:
    """Flat per-run summary."""

    event_count: int
    step_count: int
    event_ratio: float
    min_gap: Optional[float]
    mean_gap: Optional[float]
    max_gap: Optional[float]
    eta_hat: Optional[float]
    eta_violations: int
    steady_band_x1: tuple[float, float]
    tracking_rmse: float
    max_discretization_error: float

    def as_dict(self) -> dict:
        return {
            "event_count": self.event_count,
            "step_count": self.step_count,
            "event_ratio": self.event_ratio,
            "min_gap": self.min_gap,
            "mean_gap": self.mean_gap,
            "max_gap": self.max_gap,
            "eta_hat": self.eta_hat,
            "eta_violations": self.eta_violations,
            "steady_band_x1_min": self.steady_band_x1[0],
            "steady_band_x1_max": self.steady_band_x1[1],
            "tracking_rmse": self.tracking_rmse,
            "max_discretization_error": self.max_discretization_error,
        }


def rk4_step(x: DimlessState, u: float, t: float, h: float,
             p: DimlessParams, d: Disturbance) -> DimlessState:
    """Classical 4-stage step with u held constant across stages (ZOH)."""
    if not h > 0.0:
        raise InvalidParameterError("h must be positive")
    k1 = state_derivative(x, u, t, p, d)
    k2 = state_derivative(DimlessState(x.x1 + 0.5 * h * k1.x1,
                                       x.x2 + 0.5 * h * k1.x2),
                          u, t + 0.5 * h, p, d)
    k3 = state_derivative(DimlessState(x.x1 + 0.5 * h * k2.x1,
                                       x.x2 + 0.5 * h * k2.x2),
                          u, t + 0.5 * h, p, d)
    k4 = state_derivative(DimlessState(x.x1 + h * k3.x1,
                                       x.x2 + h * k3.x2),
                          u, t + h, p, d)
    nxt = DimlessState(
        x.x1 + h / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
        x.x2 + h / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
    )
    if not nxt.is_finite():
        raise SimulationDivergedError(
            f"state became nonfinite at t={t + h}: {nxt}")
    return nxt


def _run_loop(cfg: SimConfig, every_step: bool,
              flip_control_sign: bool) -> tuple[Trajectory, EventLog]:
    # Scalar fast path; equivalence with the public plant/controller
    # operations is covered by tests.
    p, sp, tp, r = cfg.plant, cfg.sliding, cfg.trigger, cfg.reference
    d = cfg.disturbance()
    n = cfg.step_count()
    h = cfg.h
    da, gm, brise, beta, x2c0 = p.da, p.gamma, p.b_rise, p.beta, p.x2c0
    lam1, lam2, mu = sp.lambda1, sp.lambda2, sp.mu
    zeta, xi, psi, m1, m2, vsig = tp.zeta, tp.xi, tp.psi, tp.m1, tp.m2, tp.varsigma
    use1 = 1 in tp.indices
    use2 = 2 in tp.indices
    x1c, x2ss, k1r, k2r = r.x1_const, r.x2ss, r.k1, r.k2
    if d.bound == 0.0:
        # a zero-bound disturbance is identically zero: skip the per-stage
        # callable evaluation (pure speed, identical arithmetic)
        def d_eval(t: float) -> tuple[float, float]:
            return 0.0, 0.0
    else:
        d_eval = d.eval
    exp = math.exp
    flip = -1.0 if flip_control_sign else 1.0

    def fpair(x1: float, x2: float) -> tuple[float, float]:
        # expression order mirrors eval_f1/eval_f2 bit for bit
        den = 1.0 + x2 / gm
        if abs(den) < SINGULAR_TOL:
            raise SingularExponentError(
                f"1 + x2/gamma vanishes (x2={x2}, gamma={gm})")
        ex = exp(x2 / den)
        return (-x1 + da * (1.0 - x1) * ex,
                -x2 + brise * da * (1.0 - x1) * ex - beta * (x2 - x2c0))

    ts = np.empty(n + 1)
    x1s = np.empty(n + 1)
    x2s = np.empty(n + 1)
    x1rs = np.empty(n + 1)
    x2rs = np.empty(n + 1)
    us = np.empty(n + 1)
    sig = np.empty(n + 1)
    sigd = np.empty(n + 1)
    dlt = np.empty(n + 1)
    evt = np.zeros(n + 1, dtype=bool)
    eps = np.empty(n + 1)
    log = EventLog()
    event_steps: list[int] = []

    warned_x1 = False
    x1, x2 = cfg.x0.x1, cfg.x0.x2
    u = 0.0
    xk1, xk2 = x1, x2

    for i in range(n + 1):
        t = i * h
        if i > 0:
            t0 = t - h
            a1, a2 = fpair(x1, x2)
            dd1, dd2 = d_eval(t0)
            a1 -= dd2
            a2 = a2 + beta * u + dd1
            b1, b2 = fpair(x1 + 0.5 * h * a1, x2 + 0.5 * h * a2)
            dd1, dd2 = d_eval(t0 + 0.5 * h)
            b1 -= dd2
            b2 = b2 + beta * u + dd1
            c1, c2 = fpair(x1 + 0.5 * h * b1, x2 + 0.5 * h * b2)
            c1 -= dd2
            c2 = c2 + beta * u + dd1
            e1_, e2_ = fpair(x1 + h * c1, x2 + h * c2)
            dd1, dd2 = d_eval(t)
            e1_ -= dd2
            e2_ = e2_ + beta * u + dd1
            x1 += h / 6.0 * (a1 + 2.0 * b1 + 2.0 * c1 + e1_)
            x2 += h / 6.0 * (a2 + 2.0 * b2 + 2.0 * c2 + e2_)
            if not (math.isfinite(x1) and math.isfinite(x2)):
                raise SimulationDivergedError(
                    f"state became nonfinite at t={t}: ({x1}, {x2})")
            if x1 >= 1.0 + X1_PHYSICAL_TOL and not warned_x1:
                warnings.warn(
                    f"x1={x1:.4f} exceeds feed conversion at t={t:.4f}",
                    RuntimeWarning, stacklevel=3)
                warned_x1 = True

        emk2 = exp(-k2r * t)
        x2ref = x2ss * (1.0 - k1r * emk2)
        x2ref_dot = x2ss * k1r * k2r * emk2
        f1v, f2v = fpair(x1, x2)
        dd1, dd2 = d_eval(t)
        e1 = x1 - x1c
        e2 = x2 - x2ref
        e1dot = f1v - dd2
        e2dot = f2v + beta * u + dd1 - x2ref_dot
        thr = psi * (m1 + m2 * exp(-vsig * t))
        val = -math.inf
        if use1:
            val = abs(zeta * e1 + xi * e1dot * e1dot)
        if use2:
            v2 = abs(zeta * e2 + xi * e2dot * e2dot)
            if v2 > val:
                val = v2
        margin = val - thr
        # discretization error relative to the last snapshot, taken before
        # any update at this instant (it vanishes at update instants)
        eps[i] = math.hypot(x1 - xk1, x2 - xk2)

        fire = i == 0 or margin >= 0.0 or every_step
        if fire:
            s = lam1 * e1 + lam2 * e2
            sgn = 1.0 if s > 0.0 else (-1.0 if s < 0.0 else 0.0)
            drift1 = f1v - dd2
            drift2 = f2v + dd1 - x2ref_dot
            u = flip * (-(lam1 * drift1 + lam2 * drift2 + mu * sgn)
                        / (lam2 * beta))
            xk1, xk2 = x1, x2
            log.instants.append(t)
            event_steps.append(i)
            log.delta_at_event.append(margin)
            e2dot = f2v + beta * u + dd1 - x2ref_dot

        ts[i] = t
        x1s[i] = x1
        x2s[i] = x2
        x1rs[i] = x1c
        x2rs[i] = x2ref
        us[i] = u
        sig[i] = lam1 * e1 + lam2 * e2
        sigd[i] = lam1 * e1dot + lam2 * e2dot
        dlt[i] = margin
        evt[i] = fire

    # gaps are exact step multiples; differencing the rounded instants
    # instead would lose an ulp
    log.gaps = [(b - a) * h for a, b in zip(event_steps, event_steps[1:])]
    log.check(h)

    band = np.array([threshold(t, tp) for t in ts])
    band /= min(abs(lam1), abs(lam2))
    traj = Trajectory(
        t=ts, x1=x1s, x2=x2s, x1ref=x1rs, x2ref=x2rs, u=us,
        sigma=sig, sigma_dot=sigd, delta=dlt, event=evt,
        v=0.5 * sig * sig, band=band, eps=eps,
    )

    eps_max = max(float(eps.max()), 1e-300)
    lip = estimate_lipschitz(p)
    for t_k in log.instants:
        idx = int(round(t_k / h))
        x_k = DimlessState(float(x1s[idx]), float(x2s[idx]))
        log.bound_at_event.append(zeno_bound(x_k, eps_max, lip, p, sp))
    return traj, log


def run_event_triggered(cfg: SimConfig, *, flip_control_sign: bool = False
                        ) -> tuple[Trajectory, EventLog, Metrics]:
    """Event-triggered closed-loop run (the default operating mode)."""
    traj, log = _run_loop(cfg, every_step=False,
                          flip_control_sign=flip_control_sign)
    return traj, log, compute_metrics(traj, log)


def run_time_triggered(cfg: SimConfig) -> tuple[Trajectory, Metrics]:
    """Baseline run with the control recomputed at every grid point."""
    traj, log = _run_loop(cfg, every_step=True, flip_control_sign=False)
    return traj, compute_metrics(traj, log)


def verify_reachability(traj: Trajectory,
                        band: np.ndarray | float | None = None
                        ) -> ReachabilityResult:
    """Empirical reaching check over samples with |sigma| above the band.

    Returns the minimum of -sigma*sigma_dot/|sigma| and the indices where
    the reaching inequality sigma*sigma_dot < 0 fails.
    """
    if band is None:
        band = traj.band
    mask = np.abs(traj.sigma) > band
    if not mask.any():
        return ReachabilityResult(applicable=False, eta_hat=None, violations=[])
    s = traj.sigma[mask]
    sd = traj.sigma_dot[mask]
    rates = -s * sd / np.abs(s)
    violations = np.flatnonzero(mask)[s * sd >= 0.0]
    return ReachabilityResult(
        applicable=True,
        eta_hat=float(rates.min()),
        violations=[int(i) for i in violations],
    )


def compute_metrics(traj: Trajectory, log: EventLog) -> Metrics:
    steps = len(traj.t) - 1
    gaps = log.gaps
    reach = verify_reachability(traj)
    tail = traj.t >= traj.t[-1] - 0.2 * (traj.t[-1] - traj.t[0])
    e2 = traj.x2 - traj.x2ref
    return Metrics(
        event_count=len(log.instants),
        step_count=steps,
        event_ratio=len(log.instants) / steps if steps else float("nan"),
        min_gap=min(gaps) if gaps else None,
        mean_gap=sum(gaps) / len(gaps) if gaps else None,
        max_gap=max(gaps) if gaps else None,
        eta_hat=reach.eta_hat,
        eta_violations=len(reach.violations),
        steady_band_x1=(float(traj.x1[tail].min()), float(traj.x1[tail].max())),
        tracking_rmse=float(np.sqrt(np.mean(e2 * e2))),
        max_discretization_error=float(traj.eps.max()),
    )


def check_invariants(traj: Trajectory, log: EventLog, cfg: SimConfig
                     ) -> list[str]:
    """Runtime invariant checks; returns the names of violated invariants."""
    bad: list[str] = []
    ev = traj.event
    du = np.diff(traj.u)
    if np.any((du != 0.0) & ~ev[1:]):
        bad.append("control-piecewise-constant")
    if np.any(traj.v != 0.5 * traj.sigma * traj.sigma):
        bad.append("lyapunov-consistency")
    outside = np.abs(traj.sigma[:-1]) > traj.band[:-1]
    if np.any(outside & (np.diff(traj.v) > 0.0)):
        bad.append("lyapunov-decrease-outside-band")
    flagged = {int(i) for i in np.flatnonzero(ev)}
    logged = {int(round(t_k / cfg.h)) for t_k in log.instants}
    if flagged != logged:
        bad.append("event-cross-consistency")
    if np.any(traj.delta[~ev] >= 0.0):
        bad.append("delta-log-consistency")
    elif np.any(traj.delta[ev][1:] < 0.0) and not np.all(ev):
        # t=0 fires unconditionally; an all-events run has no conditional fire
        bad.append("delta-log-consistency")
    if log.gaps and min(log.gaps) < cfg.h - 1e-12:
        bad.append("gaps-ge-step")
    if any(b <= 0.0 for b in log.bound_at_event):
        bad.append("zeno-bound-positive")
    if any(b <= a for a, b in zip(log.instants, log.instants[1:])):
        bad.append("instants-increasing")
    return list(dict.fromkeys(bad))


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Trajectory CSV with the documented column set."""
    lines = ["t,x1,x2,x1ref,x2ref,u,sigma,delta,event"]
    cols = (traj.t, traj.x1, traj.x2, traj.x1ref, traj.x2ref,
            traj.u, traj.sigma, traj.delta)
    for i in range(len(traj.t)):
        vals = ",".join(repr(float(c[i])) for c in cols)
        lines.append(f"{vals},{int(traj.event[i])}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
