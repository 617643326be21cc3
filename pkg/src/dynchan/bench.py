"""Benchmark execution and CSV reporting.

Trials are scheduled deterministically, executed (optionally in parallel)
and reduced in schedule order, so a fixed seed yields byte-identical CSV
output regardless of worker count.
"""

import io
import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from dynchan import planner as _planner
from dynchan import simulate as _sim
from dynchan.datasets import make_trials

TRIAL_HEADER = ["dataset", "planner", "trial_id", "start_offset_s", "outcome",
                "travel_time_s", "mean_plan_ms", "max_plan_ms", "min_clearance_m"]
SUMMARY_HEADER = ["dataset", "planner", "trials", "success_rate",
                  "travel_mean_s", "travel_std_s", "plan_mean_ms", "plan_std_ms",
                  "peds_mean", "peds_std"]

PLANNERS = ("dynamic_channels", "gvo", "wait_and_go")


@dataclass(frozen=True)
class _Job:
    dataset_name: str
    planner: str
    trial_id: int
    start_offset_s: float
    scenario: object
    plan_cfg: object
    sim_cfg: object
    seed: int
    measure_time: bool


def _run_job(job: _Job):
    result = _sim.run_trial(job.scenario, job.planner, job.plan_cfg, job.sim_cfg,
                            seed=job.seed, measure_time=job.measure_time)
    return job, result


def _fmt(x):
    if x == math.inf:
        return "inf"
    return f"{x:.6f}"


def run_benchmark(datasets, planners, plan_cfg=None, sim_cfg=None, seed=0,
                  jobs=1, interval=3.0, sensing_range=math.inf,
                  measure_time=True, scenarios=None):
    """Run every scheduled trial for every planner.

    Returns (trial_rows, summary_rows) as lists of string lists matching
    TRIAL_HEADER and SUMMARY_HEADER.  ``scenarios`` overrides the schedule
    derived from ``datasets`` via make_trials.
    """
    plan_cfg = plan_cfg or _planner.PlannerConfig()
    sim_cfg = sim_cfg or _sim.SimConfig()
    for p in planners:
        if p not in PLANNERS:
            raise ValueError(f"unknown planner {p!r}")

    jobs_list = []
    counter = 0
    for ds in datasets:
        sched = scenarios if scenarios is not None else make_trials(ds, interval)
        for planner in planners:
            for tid, scen in enumerate(sched):
                if sensing_range != math.inf:
                    scen = type(scen)(dataset=scen.dataset, start=scen.start,
                                      goal=scen.goal, start_frame=scen.start_frame,
                                      sensing_range=sensing_range)
                jobs_list.append(_Job(
                    dataset_name=ds.name, planner=planner, trial_id=tid,
                    start_offset_s=scen.start_frame * ds.dt, scenario=scen,
                    plan_cfg=plan_cfg, sim_cfg=sim_cfg,
                    # trial seed depends on schedule position only, never on
                    # execution order
                    seed=seed * 1000003 + counter, measure_time=measure_time))
                counter += 1

    if jobs > 1 and len(jobs_list) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_job, jobs_list, chunksize=4))
    else:
        results = [_run_job(j) for j in jobs_list]

    trial_rows = []
    groups = {}
    for job, res in results:
        plan_ms = [1e3 * t for t in res.planning_times]
        trial_rows.append([
            job.dataset_name, job.planner, str(job.trial_id),
            _fmt(job.start_offset_s), res.outcome, _fmt(res.travel_time),
            _fmt(float(np.mean(plan_ms)) if plan_ms else 0.0),
            _fmt(max(plan_ms) if plan_ms else 0.0),
            _fmt(res.min_clearance)])
        key = (job.dataset_name, job.planner)
        groups.setdefault(key, []).append((res, plan_ms))

    summary_rows = []
    for (ds_name, planner) in sorted(groups):
        rows = groups[(ds_name, planner)]
        n = len(rows)
        succ = sum(1 for r, _ in rows if r.outcome == "success")
        travel = np.array([r.travel_time for r, _ in rows])
        cycles = np.concatenate([np.asarray(ms) if ms else np.zeros(1)
                                 for _, ms in rows])
        peds = np.array([r.peds_per_frame for r, _ in rows])
        summary_rows.append([
            ds_name, planner, str(n), _fmt(succ / n),
            _fmt(float(travel.mean())), _fmt(float(travel.std())),
            _fmt(float(cycles.mean())), _fmt(float(cycles.std())),
            _fmt(float(peds.mean())), _fmt(float(peds.std()))])
    return trial_rows, summary_rows


def write_csv(path_or_file, header, rows):
    if hasattr(path_or_file, "write"):
        w = csv.writer(path_or_file, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return
    with open(path_or_file, "w", newline="") as fh:
        write_csv(fh, header, rows)


def csv_bytes(header, rows):
    buf = io.StringIO()
    write_csv(buf, header, rows)
    return buf.getvalue().encode()
