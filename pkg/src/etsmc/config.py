"""Key-value configuration ingestion with documented defaults.

The file format is flat ``key = value`` lines, ``#`` comments, decimal dot.
Missing keys fall back to the documented default experiment parameterization;
unknown keys are hard errors.  The optional physical block (k0 .. b) is only
accepted as a whole.
"""

from __future__ import annotations

from typing import Mapping

from .controller import ReferenceSignal, SlidingParams
from .plant import (DimlessParams, DimlessState, InvalidParameterError,
                    PhysicalParams)
from .sim import SimConfig
from .trigger import TriggerParams


class ConfigError(ValueError):
    """Malformed or invalid configuration input."""


#: Default experiment parameterization (startup tracking case).
DEFAULTS: dict[str, float] = {
    # plant
    "da": 0.078,
    "gamma": 20.0,
    "b_rise": 8.0,
    "beta": 0.3,
    "x2c0": 0.0,
    # disturbance signals
    "d1_amp": 0.026,
    "d1_freq": 0.1,
    "d2_amp": 0.037,
    "d2_freq": 0.1,
    # sliding manifold and switching gain
    "lambda1": 1.0,
    "lambda2": 2.0,
    "mu": 25.0,
    # triggering rule
    "zeta": 0.8,
    "xi": 0.8,
    "psi": 0.5,
    "m1": 1e-4,
    "m2": 0.2025,
    "varsigma": 0.97,
    "trigger_both": 0.0,   # 1.0 enables the {1,2}-OR index mode
    # reference trajectory
    "x1ref": 0.4472,
    "x2ss": 2.6516,
    "k1": 1.0,
    "k2": 1.0,
    # integration
    "h": 1e-3,
    "t_end": 50.0,
    "x0_1": 0.0,
    "x0_2": 0.0,
    "tf0_kelvin": 300.0,
}

#: Optional keys without defaults.
OPTIONAL_KEYS = ("setpoint_kelvin",)

#: The optional physical parameter block, all-or-nothing.
PHYSICAL_KEYS = ("k0", "caf0", "f0", "rho", "cp", "dh", "rhoc", "cpc",
                 "v", "fc", "e", "r", "tf0", "tc0", "a", "b")


def _parse_lines(text: str) -> dict[str, float]:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip().lower()
        val = val.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        known = key in DEFAULTS or key in OPTIONAL_KEYS or key in PHYSICAL_KEYS
        if not known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = float(val)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: value for {key!r} is not a decimal number")
    return values


def build_config(values: Mapping[str, float],
                 scenario: str = "nominal") -> SimConfig:
    """Assemble a validated SimConfig from resolved key-value pairs."""
    v = dict(DEFAULTS)
    v.update(values)

    physical = None
    present = [k for k in PHYSICAL_KEYS if k in v]
    if present:
        missing = [k for k in PHYSICAL_KEYS if k not in v]
        if missing:
            raise ConfigError(
                f"incomplete physical block, missing: {', '.join(missing)}")
        try:
            physical = PhysicalParams(**{k: v[k] for k in PHYSICAL_KEYS})
        except InvalidParameterError as exc:
            raise ConfigError(str(exc)) from exc

    indices = (1, 2) if v["trigger_both"] else (2,)
    try:
        return SimConfig(
            plant=DimlessParams(da=v["da"], gamma=v["gamma"],
                                b_rise=v["b_rise"], beta=v["beta"],
                                x2c0=v["x2c0"]),
            sliding=SlidingParams(lambda1=v["lambda1"], lambda2=v["lambda2"],
                                  mu=v["mu"]),
            trigger=TriggerParams(zeta=v["zeta"], xi=v["xi"], psi=v["psi"],
                                  m1=v["m1"], m2=v["m2"],
                                  varsigma=v["varsigma"], indices=indices),
            reference=ReferenceSignal(x1_const=v["x1ref"], x2ss=v["x2ss"],
                                      k1=v["k1"], k2=v["k2"]),
            h=v["h"],
            t_end=v["t_end"],
            x0=DimlessState(v["x0_1"], v["x0_2"]),
            scenario=scenario,
            d1_amp=v["d1_amp"],
            d1_freq=v["d1_freq"],
            d2_amp=v["d2_amp"],
            d2_freq=v["d2_freq"],
            setpoint_kelvin=v.get("setpoint_kelvin"),
            tf0_kelvin=v["tf0_kelvin"],
            physical=physical,
        )
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path, scenario: str = "nominal") -> SimConfig:
    """Read, validate and resolve a configuration file."""
    with open(path) as fh:
        text = fh.read()
    return build_config(_parse_lines(text), scenario=scenario)


def config_values(cfg: SimConfig) -> dict[str, float]:
    """The resolved key-value view of a SimConfig (inverse of build_config)."""
    out = {
        "da": cfg.plant.da,
        "gamma": cfg.plant.gamma,
        "b_rise": cfg.plant.b_rise,
        "beta": cfg.plant.beta,
        "x2c0": cfg.plant.x2c0,
        "d1_amp": cfg.d1_amp,
        "d1_freq": cfg.d1_freq,
        "d2_amp": cfg.d2_amp,
        "d2_freq": cfg.d2_freq,
        "lambda1": cfg.sliding.lambda1,
        "lambda2": cfg.sliding.lambda2,
        "mu": cfg.sliding.mu,
        "zeta": cfg.trigger.zeta,
        "xi": cfg.trigger.xi,
        "psi": cfg.trigger.psi,
        "m1": cfg.trigger.m1,
        "m2": cfg.trigger.m2,
        "varsigma": cfg.trigger.varsigma,
        "trigger_both": 1.0 if cfg.trigger.indices == (1, 2) else 0.0,
        "x1ref": cfg.reference.x1_const,
        "x2ss": cfg.reference.x2ss,
        "k1": cfg.reference.k1,
        "k2": cfg.reference.k2,
        "h": cfg.h,
        "t_end": cfg.t_end,
        "x0_1": cfg.x0.x1,
        "x0_2": cfg.x0.x2,
        "tf0_kelvin": cfg.tf0_kelvin,
    }
    if cfg.setpoint_kelvin is not None:
        out["setpoint_kelvin"] = cfg.setpoint_kelvin
    if cfg.physical is not None:
        for k in PHYSICAL_KEYS:
            out[k] = getattr(cfg.physical, k)
    return out


def emit_config(cfg: SimConfig) -> str:
    """Serialize the resolved configuration; reparsing gives an equal config."""
    lines = [f"{k} = {v!r}" for k, v in config_values(cfg).items()]
    return "\n".join(lines) + "\n"
