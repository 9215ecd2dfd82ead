"""Batch experiment front end: scenario dispatch and artifact emission."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import sim
from .config import ConfigError, build_config, config_values, parse_config
from .plant import PlantError
from .plots import emit_plot
from .sim import (SimConfig, check_invariants, resolve_regulation,
                  run_event_triggered, run_time_triggered,
                  write_trajectory_csv)
from .trigger import write_event_csv

SCENARIO_NAMES = ("nominal", "disturbed", "regulate-300", "regulate-400",
                  "regulate-500", "baseline-comparison")


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record: resolved config, artifacts and digests."""

    scenario: str
    config: dict
    outdir: str
    files: dict[str, str]  # filename -> sha256


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _scenario_config(name: str, cfg: SimConfig) -> SimConfig:
    if name == "nominal" or name == "baseline-comparison":
        return replace(cfg, scenario="nominal")
    if name == "disturbed":
        return replace(cfg, scenario="disturbed")
    if name.startswith("regulate-"):
        setpoint = float(name.split("-", 1)[1])
        cfg = replace(cfg, scenario="regulate", setpoint_kelvin=setpoint)
        return resolve_regulation(cfg)
    raise ConfigError(f"unknown scenario {name!r}")


def _write_metrics(path_txt: Path, path_json: Path, metrics: dict) -> None:
    lines = [f"{k} = {v}" for k, v in metrics.items()]
    path_txt.write_text("\n".join(lines) + "\n")
    path_json.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n")


def run_scenario(name: str, cfg: SimConfig, outdir) -> tuple[RunManifest, list[str]]:
    """Execute one named scenario, write all artifacts, return manifest and
    the list of violated run invariants."""
    if name not in SCENARIO_NAMES:
        raise ConfigError(f"unknown scenario {name!r}; "
                          f"expected one of {', '.join(SCENARIO_NAMES)}")
    out = Path(outdir) / name
    out.mkdir(parents=True, exist_ok=True)
    rcfg = _scenario_config(name, cfg)

    traj, log, metrics = run_event_triggered(rcfg)
    violations = check_invariants(traj, log, rcfg)
    metrics_dict = metrics.as_dict()

    if name == "baseline-comparison":
        tt_traj, tt_metrics = run_time_triggered(rcfg)
        metrics_dict.update(
            {f"baseline_{k}": v for k, v in tt_metrics.as_dict().items()})
        metrics_dict["update_saving_vs_baseline"] = (
            1.0 - metrics.event_count / tt_metrics.event_count)

    write_trajectory_csv(traj, out / "trajectory.csv")
    write_event_csv(log, out / "events.csv")
    _write_metrics(out / "metrics.txt", out / "metrics.json", metrics_dict)

    emit_plot([("x1", traj.t, traj.x1), ("x1 reference", traj.t, traj.x1ref)],
              "line", out / "composition.svg",
              title=f"Composition profile ({name})",
              xlabel="dimensionless time", ylabel="x1")
    emit_plot([("x2", traj.t, traj.x2), ("x2 reference", traj.t, traj.x2ref)],
              "line", out / "temperature.svg",
              title=f"Temperature profile ({name})",
              xlabel="dimensionless time", ylabel="x2")
    if log.gaps:
        emit_plot([("inter-event time", log.instants[:-1], log.gaps)],
                  "stem", out / "events.svg",
                  title=f"Sampling instants and intervals ({name})",
                  xlabel="event instant", ylabel="inter-event time")
    else:
        emit_plot([("events", log.instants, [1.0] * len(log.instants))],
                  "stem", out / "events.svg",
                  title=f"Sampling instants ({name})",
                  xlabel="event instant", ylabel="event")

    files = {p.name: _sha256(p) for p in sorted(out.iterdir())
             if p.name != "manifest.json"}
    manifest = RunManifest(
        scenario=name,
        config=config_values(rcfg),
        outdir=str(out),
        files=files,
    )
    (out / "manifest.json").write_text(json.dumps(
        {"scenario": manifest.scenario, "config": manifest.config,
         "outdir": manifest.outdir, "files": manifest.files,
         "invariant_violations": violations},
        indent=2, sort_keys=True) + "\n")
    return manifest, violations


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etsmc",
        description="Event-triggered sliding-mode CSTR simulation runner")
    parser.add_argument("--scenario", default="nominal",
                        choices=SCENARIO_NAMES)
    parser.add_argument("--config", type=Path, default=None,
                        help="key = value configuration file")
    parser.add_argument("--out", type=Path, default=Path("runs"),
                        help="output directory root")
    parser.add_argument("--step", type=float, default=None,
                        help="integration step override")
    parser.add_argument("--duration", type=float, default=None,
                        help="horizon override")
    parser.add_argument("--setpoint-kelvin", type=float, default=None)
    parser.add_argument("--tf0-kelvin", type=float, default=None)
    parser.add_argument("--baseline", action="store_true",
                        help="also run the time-triggered baseline "
                             "(same as --scenario baseline-comparison)")
    parser.add_argument("--seed", type=int, default=None,
                        help="reserved; validated but unused (runs are "
                             "deterministic)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = parse_config(args.config)
        else:
            cfg = build_config({})
        overrides = {}
        if args.step is not None:
            overrides["h"] = args.step
        if args.duration is not None:
            overrides["t_end"] = args.duration
        if args.setpoint_kelvin is not None:
            overrides["setpoint_kelvin"] = args.setpoint_kelvin
        if args.tf0_kelvin is not None:
            overrides["tf0_kelvin"] = args.tf0_kelvin
        if overrides:
            cfg = replace(cfg, **overrides)
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed must be nonnegative")
        scenario = args.scenario
        if args.baseline and scenario == "nominal":
            scenario = "baseline-comparison"
        manifest, violations = run_scenario(scenario, cfg, args.out)
    except (ConfigError, PlantError, sim.SimulationDivergedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(manifest.files)} artifacts to {manifest.outdir}")
    if violations:
        print("invariant check failed: " + ", ".join(violations),
              file=sys.stderr)
        return 1
    print("all run invariants passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
