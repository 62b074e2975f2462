"""``railguard`` command line.

Exit codes: 0 success, 1 runtime or validation failure, 2 usage error
(bad flags, malformed scenario document, bad grid, missing seed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .common import RailguardError, parse_speed
from .netsim import metrics_by_class, records_to_csv
from .pipeline import braking_curve, curve_to_csv, run_end_to_end, run_scenario_network
from .brakes import trajectory_to_csv
from .scenario import ScenarioParseError, load_scenario_file
from .spoiler import Placement, design_grid, spoiler_type, sweep, sweep_to_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_CURVE_SPEEDS = "50kmh,100kmh,150kmh,200kmh,250kmh,300kmh,350kmh"
DEFAULT_SWEEP_TYPES = "macro,micro,counter"
DEFAULT_SWEEP_ANGLES = "0:90:10"
DEFAULT_SWEEP_AREAS = "2,4,6"
DEFAULT_SWEEP_SPEEDS = "100kmh,200kmh,300kmh"


class UsageError(RailguardError):
    """Bad flags or an unparsable grid."""


def parse_range(text: str) -> list[float]:
    """``a:b:step`` (inclusive of ``b``) or a comma list.

    >>> parse_range("0:90:10")
    [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0]
    """
    text = text.strip()
    if not text:
        raise UsageError("empty grid")
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3:
                raise UsageError(f"range {text!r} must be start:stop:step")
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise UsageError(f"range {text!r} needs step > 0 and stop >= start")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return [float(start + i * step) for i in range(n)]
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}") from None


def parse_speeds(text: str) -> list[float]:
    items = [p for p in text.split(",") if p.strip()]
    if not items:
        raise UsageError("speed grid must be non-empty")
    try:
        return [parse_speed(p) for p in items]
    except ValueError:
        raise UsageError(f"cannot parse speeds {text!r}") from None


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="railguard", description="High-speed train braking and sensor-network co-simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, type=Path, help="scenario TOML document")
        p.add_argument("--seed", type=int, default=None, help="overrides sim.seed")
        p.add_argument("--out", type=Path, default=Path("out"), help="output root (default: out)")
        p.add_argument("--name", default=None, help="run name (default: scenario file stem)")

    p = sub.add_parser("braking-curve", help="stopping distance vs initial speed per brake configuration")
    common(p)
    p.add_argument("--speeds", default=DEFAULT_CURVE_SPEEDS,
                   help="comma list of initial speeds, m/s or with kmh suffix (default: %(default)s)")
    p.add_argument("--timestep", type=float, default=None, help="integration step (default: sim.timestep)")

    p = sub.add_parser("netsim", help="sensor network simulation, latency metrics per class")
    common(p)
    p.add_argument("--duration", type=float, default=30.0, help="seconds of sensor activity (default: 30)")

    p = sub.add_parser("end-to-end", help="hazard -> network alert -> brake onset -> stop")
    common(p)
    p.add_argument("--delay", type=float, default=0.0, help="extra network delay injected before onset, s")

    p = sub.add_parser("spoiler-sweep", help="Pareto sweep over spoiler type x angle x area")
    common(p)
    p.add_argument("--types", default=DEFAULT_SWEEP_TYPES, help="comma list of macro,micro,counter")
    p.add_argument("--angles", default=DEFAULT_SWEEP_ANGLES, help="degrees, start:stop:step or comma list")
    p.add_argument("--areas", default=DEFAULT_SWEEP_AREAS, help="m^2, start:stop:step or comma list")
    p.add_argument("--speeds", default=DEFAULT_SWEEP_SPEEDS, help="evaluation speeds (default: %(default)s)")
    p.add_argument("--placement", default="ROOF", choices=[pl.value for pl in Placement])
    return parser


def _seed(args, scenario) -> int:
    seed = args.seed if args.seed is not None else scenario.seed
    if seed is None:
        raise UsageError("no seed: pass --seed or set sim.seed in the scenario")
    return seed


def _run(args) -> int:
    scenario = load_scenario_file(args.scenario)
    run_dir = args.out / (args.name or scenario.name or args.scenario.stem)

    if args.command == "braking-curve":
        speeds = parse_speeds(args.speeds)
        rows = braking_curve(scenario, speeds, timestep=args.timestep)
        write_atomic(run_dir / "braking_curve.csv", curve_to_csv(rows))
        for r in rows:
            print(f"{r.config:18s} {r.speed * 3.6:7.1f} km/h  {r.distance:9.1f} m")
        return EXIT_OK

    if args.command == "netsim":
        if not args.duration > 0:
            raise UsageError("--duration must be > 0")
        seed = _seed(args, scenario)
        records = run_scenario_network(scenario, args.duration, seed)
        metrics = metrics_by_class(records)
        write_atomic(run_dir / "result.json", dumps_json({"seed": seed, "duration": args.duration,
                                                          "metrics": metrics}))
        write_atomic(run_dir / "net_records.csv", records_to_csv(records))
        for cls, m in metrics.items():
            mean = m.get("mean")
            print(f"class {cls}: n={m['count']} delivered={m['delivered_ratio']:.4f} "
                  f"mean={'-' if mean is None else f'{mean * 1e3:.3f} ms'}")
        return EXIT_OK

    if args.command == "end-to-end":
        if args.delay < 0:
            raise UsageError("--delay must be >= 0")
        seed = _seed(args, scenario)
        res = run_end_to_end(scenario, extra_delay=args.delay, seed=seed)
        doc = {"seed": seed, **res.to_dict()}
        write_atomic(run_dir / "result.json", dumps_json(doc))
        write_atomic(run_dir / "trajectory.csv", trajectory_to_csv(res.stop))
        write_atomic(run_dir / "net_records.csv", records_to_csv(res.records))
        print(f"mode {res.mode.value}: onset {res.brake_onset_time:.4f} s, "
              f"stopping distance from hazard {res.stopping_distance_from_hazard:.1f} m"
              + (f", OVERRUN {res.overrun:.1f} m" if res.overrun > 0 else ""))
        return EXIT_OK

    if args.command == "spoiler-sweep":
        try:
            types = [spoiler_type(t) for t in args.types.split(",") if t.strip()]
        except ValueError:
            raise UsageError(f"unknown spoiler type in {args.types!r}") from None
        if not types:
            raise UsageError("empty type list")
        grid = design_grid(types, parse_range(args.angles), parse_range(args.areas), Placement(args.placement))
        rows = sweep(grid, parse_speeds(args.speeds), scenario.air_density)
        write_atomic(run_dir / "sweep.csv", sweep_to_csv(rows))
        print(f"{sum(r.pareto for r in rows)} Pareto-optimal of {len(rows)} designs")
        return EXIT_OK
    raise UsageError(f"unknown command {args.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        return _run(args)
    except (UsageError, ScenarioParseError) as exc:
        print(f"railguard: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"railguard: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RailguardError, ValueError, KeyError) as exc:
        print(f"railguard: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
