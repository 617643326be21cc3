"""Command-line front end: single plans, benchmarks, synthetic crowd export,
and sensing-range sweeps, all emitting deterministic CSV."""

import argparse
import dataclasses
import math
import sys

import numpy as np

from dynchan import bench as _bench
from dynchan import crowd as _crowd
from dynchan import datasets as _datasets
from dynchan import funnel as _funnel
from dynchan import planner as _planner
from dynchan import simulate as _sim
from dynchan.geometry import GeometryError

SWEEP_HEADER = ["range_m", "trials", "success_rate", "travel_mean_s",
                "plan_mean_ms", "peds_mean"]


def load_config(path):
    """Flat key=value text file; '#' starts a comment."""
    cfg = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ValueError(f"{path}:{line_no}: expected key=value")
            key, val = (s.strip() for s in text.split("=", 1))
            cfg[key] = val
    return cfg


def _coerce(value, field_type):
    if field_type is int:
        return int(value)
    if field_type is float:
        return math.inf if value in ("inf", "unlimited") else float(value)
    if field_type is tuple:
        return tuple(float(v) for v in value.replace(",", " ").split())
    return value


def build_dataclass(cls, cfg, **overrides):
    """Instantiate ``cls`` from matching keys of a flat config dict."""
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in cfg:
            kwargs[f.name] = _coerce(cfg[f.name], f.type if isinstance(f.type, type)
                                     else type(f.default))
    kwargs.update(overrides)
    return cls(**kwargs)


def _configs(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else {}
    plan_cfg = build_dataclass(_planner.PlannerConfig, cfg)
    sim_cfg = build_dataclass(_sim.SimConfig, cfg)
    return cfg, plan_cfg, sim_cfg


def _parse_point(text):
    x, y = (float(v) for v in text.replace(",", " ").split())
    return (x, y)


def load_snapshot(path):
    """Crowd snapshot CSV with header ped_id,x,y,vx,vy (velocities optional)."""
    import csv as _csv
    peds = []
    with open(path) as fh:
        reader = _csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header[:3] != ["ped_id", "x", "y"]:
            raise ValueError(f"{path}: expected header ped_id,x,y[,vx,vy]")
        for row in reader:
            if not row:
                continue
            vx = float(row[3]) if len(row) > 3 else 0.0
            vy = float(row[4]) if len(row) > 4 else 0.0
            peds.append(_crowd.Pedestrian(id=int(row[0]),
                                          position=np.array([float(row[1]), float(row[2])]),
                                          velocity=np.array([vx, vy])))
    return _crowd.CrowdSnapshot(time=0.0, pedestrians=tuple(peds))


def cmd_plan(args):
    try:
        snapshot = load_snapshot(args.snapshot)
        start = _parse_point(args.start)
        goal = _parse_point(args.goal)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _, plan_cfg, _ = _configs(args)

    if not len(snapshot):
        path = _funnel.SmoothPath(elements=(_funnel.Segment(start, goal),))
        _write_plan(args.out, [], [], snapshot, plan_cfg, path)
        return 0

    xs = snapshot.positions()
    ws = (min(xs[:, 0].min(), start[0], goal[0]), min(xs[:, 1].min(), start[1], goal[1]),
          max(xs[:, 0].max(), start[0], goal[0]), max(xs[:, 1].max(), start[1], goal[1]))
    try:
        mesh, dual, kept = _planner.planning_scene(snapshot, ws)
        channel = _planner.timed_astar(mesh, dual, kept, start, goal, plan_cfg)
        radii = _planner.assign_clearances(channel, kept, plan_cfg)
        path = _funnel.funnel_shortest(channel, start, goal, radii)
    except (_planner.NoPath, _planner.RobotOutsideHull, _funnel.ChannelPinched) as exc:
        print(f"no path: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _write_plan(args.out, channel.faces, channel.gates, kept, plan_cfg, path,
                channel.mesh)
    return 0


def _write_plan(out, faces, gates, crowd, plan_cfg, path, mesh=None):
    fh = open(out, "w") if out else sys.stdout
    try:
        fh.write("faces," + " ".join(map(str, faces)) + "\n")
        for (a, b) in gates:
            pa = _planner.vertex_pedestrian(mesh, crowd, a, plan_cfg.r_obs)
            pb = _planner.vertex_pedestrian(mesh, crowd, b, plan_cfg.r_obs)
            iv = _crowd.feasible_intervals(pa, pb, plan_cfg.d_thresh, plan_cfg.horizon)
            spans = " ".join(f"[{lo:.6f},{'inf' if hi == math.inf else f'{hi:.6f}'}]"
                             for lo, hi in iv.intervals)
            fh.write(f"gate,{a},{b},{spans}\n")
        for (x, y) in _funnel.sample_path(path, 0.2):
            fh.write(f"point,{x:.6f},{y:.6f}\n")
    finally:
        if out:
            fh.close()


def _load_datasets(paths):
    loaded, missing = [], []
    for p in paths:
        try:
            loaded.append(_datasets.load_csv(p))
        except OSError:
            missing.append(p)
    return loaded, missing


def cmd_bench(args):
    cfg, plan_cfg, sim_cfg = _configs(args)
    datasets, missing = _load_datasets(args.data or [])
    for p in missing:
        print(f"skipping missing dataset {p}", file=sys.stderr)
    if args.synth:
        synth_cfg = build_dataclass(_datasets.SyntheticConfig, cfg, seed=args.seed)
        datasets.append(_datasets.synth_crowd(synth_cfg))
    if not datasets:
        print("error: no datasets available", file=sys.stderr)
        return 1

    planners = args.planners.split(",")
    trial_rows, summary_rows = _bench.run_benchmark(
        datasets, planners, plan_cfg, sim_cfg, seed=args.seed, jobs=args.jobs,
        interval=args.interval, measure_time=args.timing == "on")
    prefix = args.out or "bench"
    _bench.write_csv(f"{prefix}_trials.csv", _bench.TRIAL_HEADER, trial_rows)
    _bench.write_csv(f"{prefix}_summary.csv", _bench.SUMMARY_HEADER, summary_rows)
    return 0


def cmd_synth(args):
    cfg = load_config(args.config) if args.config else {}
    synth_cfg = build_dataclass(_datasets.SyntheticConfig, cfg, seed=args.seed)
    ds = _datasets.synth_crowd(synth_cfg)
    _datasets.save_csv(ds, args.out or "synth.csv")
    return 0


def cmd_sweep_range(args):
    cfg, plan_cfg, sim_cfg = _configs(args)
    synth_cfg = build_dataclass(_datasets.SyntheticConfig, cfg, seed=args.seed)
    ds = _datasets.synth_crowd(synth_cfg)
    schedule = _datasets.make_trials(ds, args.interval)
    if not schedule:
        print("error: empty trial schedule", file=sys.stderr)
        return 1
    scenarios = [schedule[i % len(schedule)] for i in range(args.trials)]

    ranges = [math.inf if r in ("inf", "unlimited") else float(r)
              for r in args.ranges.split(",")]
    rows = []
    for rng in ranges:
        _, summary = _bench.run_benchmark(
            [ds], ["dynamic_channels"], plan_cfg, sim_cfg, seed=args.seed,
            jobs=args.jobs, sensing_range=rng, scenarios=scenarios,
            measure_time=args.timing == "on")
        (_, _, n, succ, travel_mean, _, plan_mean, _, peds_mean, _) = summary[0]
        rows.append(["inf" if rng == math.inf else f"{rng:.6f}",
                     n, succ, travel_mean, plan_mean, peds_mean])
    _bench.write_csv(args.out or "sweep.csv", SWEEP_HEADER, rows)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="dynchan",
                                     description="Crowd navigation planner tools")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("plan", help="plan one path through a crowd snapshot")
    p.add_argument("snapshot", help="CSV with header ped_id,x,y,vx,vy")
    p.add_argument("--start", required=True, help="x,y")
    p.add_argument("--goal", required=True, help="x,y")
    common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("bench", help="run the trial benchmark")
    p.add_argument("--data", nargs="*", default=[], help="canonical dataset CSV files")
    p.add_argument("--synth", action="store_true", help="add a synthetic dataset")
    p.add_argument("--planners", default="dynamic_channels,gvo,wait_and_go")
    p.add_argument("--interval", type=float, default=3.0)
    p.add_argument("--timing", choices=("on", "off"), default="on",
                   help="off zeroes plan-time columns for byte-exact reruns")
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate a synthetic crowd dataset CSV")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep-range", help="success/travel/planning vs sensing range")
    p.add_argument("--ranges", default="1,3,10,30,inf")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--interval", type=float, default=3.0)
    p.add_argument("--timing", choices=("on", "off"), default="on")
    common(p)
    p.set_defaults(func=cmd_sweep_range)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
