"""Pedestrian trajectory datasets: raw file ingestion, homography projection,
uniform-grid interpolation, trial schedules, and synthetic crowd generation.

Raw files are plain text, whitespace or comma separated, one observation per
line.  Two layouts are recognized: 4 columns (frame, ped_id, x, y) and the
8-column "obsmat" layout where x is column 2 and y is column 4.  An optional
3x3 homography (9 numbers, row major) reprojects image coordinates into
meters via projective division.
"""

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from dynchan.crowd import CrowdSnapshot, Pedestrian


class ParseError(ValueError):
    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class MissingHomography(ValueError):
    pass


@dataclass(frozen=True)
class TrajectoryDataset:
    name: str
    frames: tuple          # time-ordered CrowdSnapshots
    dt: float              # nominal frame period (s)
    workspace: tuple       # (xmin, ymin, xmax, ymax)
    homography: tuple = None

    def __post_init__(self):
        times = [f.time for f in self.frames]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("frame times must be strictly increasing")

    @property
    def span(self):
        if len(self.frames) < 2:
            return 0.0
        return self.frames[-1].time - self.frames[0].time


@dataclass(frozen=True)
class Scenario:
    dataset: TrajectoryDataset
    start: tuple
    goal: tuple
    start_frame: int = 0
    sensing_range: float = math.inf

    def __post_init__(self):
        if math.dist(self.start, self.goal) <= 0:
            raise ValueError("start equals goal")


@dataclass(frozen=True)
class SyntheticConfig:
    spawn_period: float = 5.0
    spawn_count: int = 2
    retarget_period: float = 3.0
    speed_range: tuple = (0.5, 1.5)
    workspace: tuple = (0.0, 0.0, 20.0, 20.0)
    duration: float = 60.0
    seed: int = 0
    dt: float = 0.1

    def __post_init__(self):
        if self.spawn_period <= 0 or self.retarget_period <= 0 or self.dt <= 0:
            raise ValueError("periods must be positive")


def _workspace_of(frames):
    pts = np.concatenate([f.positions() for f in frames if len(f)]) \
        if any(len(f) for f in frames) else np.zeros((1, 2))
    return (float(pts[:, 0].min()), float(pts[:, 1].min()),
            float(pts[:, 0].max()), float(pts[:, 1].max()))


def load_homography(path):
    """9 whitespace-separated numbers, row major, as a 3x3 matrix."""
    vals = []
    with open(path) as fh:
        for line in fh:
            vals += line.replace(",", " ").split()
    if len(vals) != 9:
        raise ParseError(1, f"homography needs 9 numbers, got {len(vals)}")
    return np.array([float(v) for v in vals]).reshape(3, 3)


def apply_homography(h, points):
    """Projective transform of (n,2) points: (u,v,1) -> (x/w, y/w)."""
    pts = np.asarray(points, dtype=float)
    ones = np.ones((len(pts), 1))
    out = np.hstack([pts, ones]) @ np.asarray(h, dtype=float).T
    return out[:, :2] / out[:, 2:3]


def load_raw(path, homography=None, frame_period=0.04, name=None) -> TrajectoryDataset:
    """Read a raw trajectory file into per-frame snapshots.

    ``homography`` may be a 3x3 array or a path to a 9-number file; when
    given, all positions are reprojected.  Frame timestamps are frame index
    times ``frame_period``.
    """
    if isinstance(homography, str):
        homography = load_homography(homography)
    records = []          # (frame, ped_id, x, y)
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            cols = text.replace(",", " ").split()
            try:
                vals = [float(c) for c in cols]
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from None
            if len(cols) == 4:
                frame, pid, x, y = vals
            elif len(cols) == 8:
                # obsmat layout: frame, id, x, ?, y, ...
                frame, pid = vals[0], vals[1]
                x, y = vals[2], vals[4]
            else:
                raise ParseError(line_no, f"expected 4 or 8 columns, got {len(cols)}")
            records.append((int(round(frame)), int(round(pid)), x, y))
    if not records:
        raise ParseError(0, "empty trajectory file")

    if homography is not None:
        xy = apply_homography(homography, [(r[2], r[3]) for r in records])
        records = [(f, p, float(x), float(y))
                   for (f, p, _, _), (x, y) in zip(records, xy)]

    by_frame = {}
    for frame, pid, x, y in records:
        by_frame.setdefault(frame, {})[pid] = (x, y)
    frames = []
    for frame in sorted(by_frame):
        peds = tuple(Pedestrian(id=pid, position=np.array(pos), velocity=np.zeros(2))
                     for pid, pos in sorted(by_frame[frame].items()))
        frames.append(CrowdSnapshot(time=frame * frame_period, pedestrians=peds))
    return TrajectoryDataset(name=name or str(path), frames=tuple(frames),
                             dt=frame_period, workspace=_workspace_of(frames),
                             homography=tuple(map(tuple, homography)) if homography is not None else None)


def interpolate(dataset: TrajectoryDataset, dt) -> TrajectoryDataset:
    """Resample every pedestrian track linearly onto a uniform dt grid.

    A pedestrian is present in a grid frame when the grid time falls inside
    its observed span, extended by at most one dt at each end.  A pedestrian
    observed once appears only at its nearest grid frame.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    tracks = {}           # ped id -> (times, points)
    for f in dataset.frames:
        for p in f.pedestrians:
            tracks.setdefault(p.id, ([], []))
            tracks[p.id][0].append(f.time)
            tracks[p.id][1].append(p.position)

    t0 = dataset.frames[0].time
    t1 = dataset.frames[-1].time
    n = int(math.floor((t1 - t0) / dt + 1e-9)) + 1
    grid = [t0 + k * dt for k in range(n)]
    frames = [dict() for _ in grid]

    for pid, (times, pts) in tracks.items():
        times = np.asarray(times)
        pts = np.asarray(pts)
        if len(times) == 1:
            k = int(round((times[0] - t0) / dt))
            if 0 <= k < n:
                frames[k][pid] = pts[0]
            continue
        lo = max(times[0] - dt, t0)
        hi = min(times[-1] + dt, t1)
        k0 = int(math.ceil((lo - t0) / dt - 1e-9))
        k1 = int(math.floor((hi - t0) / dt + 1e-9))
        for k in range(max(0, k0), min(n - 1, k1) + 1):
            t = grid[k]
            x = np.interp(t, times, pts[:, 0])
            y = np.interp(t, times, pts[:, 1])
            frames[k][pid] = np.array([x, y])

    snaps = tuple(
        CrowdSnapshot(time=grid[k],
                      pedestrians=tuple(Pedestrian(id=pid, position=pos,
                                                   velocity=np.zeros(2))
                                        for pid, pos in sorted(frames[k].items())))
        for k in range(n))
    return TrajectoryDataset(name=dataset.name, frames=snaps, dt=dt,
                             workspace=_workspace_of(snaps),
                             homography=dataset.homography)


def make_trials(dataset: TrajectoryDataset, interval) -> list:
    """Trial schedule: 4 antipodal boundary-midpoint start/goal pairs crossed
    with start offsets at multiples of ``interval`` inside the dataset span."""
    if interval <= 0:
        raise ValueError("interval must be positive")
    xmin, ymin, xmax, ymax = dataset.workspace
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    left, right = (xmin, cy), (xmax, cy)
    bottom, top = (cx, ymin), (cx, ymax)
    pairs = [(left, right), (right, left), (bottom, top), (top, bottom)]

    n_offsets = int(math.floor(dataset.span / interval + 1e-9))
    trials = []
    for k in range(n_offsets):
        start_frame = int(round(k * interval / dataset.dt))
        for start, goal in pairs:
            trials.append(Scenario(dataset=dataset, start=start, goal=goal,
                                   start_frame=start_frame))
    return trials


def synth_crowd(cfg: SyntheticConfig) -> TrajectoryDataset:
    """Crossing-flow crowd: every spawn period, pedestrians enter from the two
    vertical workspace sides and walk to random goals on the opposite side,
    re-drawing goal and speed every retarget period.  Deterministic per seed."""
    rng = np.random.default_rng(cfg.seed)
    xmin, ymin, xmax, ymax = cfg.workspace
    n_steps = int(round(cfg.duration / cfg.dt))

    peds = {}             # pid -> dict(pos, goal, speed, side)
    next_pid = 0
    next_spawn = 0.0
    next_retarget = cfg.retarget_period
    frames = []

    def fresh_goal(side):
        gx = xmax if side == 0 else xmin
        return np.array([gx, rng.uniform(ymin, ymax)])

    for k in range(n_steps + 1):
        t = k * cfg.dt
        if t + 1e-9 >= next_spawn:
            next_spawn += cfg.spawn_period
            for i in range(cfg.spawn_count):
                side = i % 2
                sx = xmin if side == 0 else xmax
                pos = np.array([sx, rng.uniform(ymin, ymax)])
                peds[next_pid] = dict(pos=pos, goal=fresh_goal(side),
                                      speed=rng.uniform(*cfg.speed_range),
                                      side=side)
                next_pid += 1
        if t + 1e-9 >= next_retarget:
            next_retarget += cfg.retarget_period
            for p in peds.values():
                p["goal"] = fresh_goal(p["side"])
                p["speed"] = rng.uniform(*cfg.speed_range)

        snapshot = []
        arrived = []
        for pid, p in sorted(peds.items()):
            d = p["goal"] - p["pos"]
            dist = float(np.hypot(d[0], d[1]))
            vel = d / dist * p["speed"] if dist > 1e-9 else np.zeros(2)
            snapshot.append(Pedestrian(id=pid, position=p["pos"].copy(),
                                       velocity=vel))
            step = p["speed"] * cfg.dt
            if dist <= step:
                arrived.append(pid)
            else:
                p["pos"] = p["pos"] + vel * cfg.dt
        for pid in arrived:
            del peds[pid]
        frames.append(CrowdSnapshot(time=t, pedestrians=tuple(snapshot)))

    return TrajectoryDataset(name=f"synth-{cfg.seed}", frames=tuple(frames),
                             dt=cfg.dt, workspace=cfg.workspace)


def sensing_filter(frame: CrowdSnapshot, robot, sensing_range) -> CrowdSnapshot:
    """Pedestrians within sensing range of the robot; None or inf keeps all."""
    if sensing_range is None or sensing_range == math.inf:
        return frame
    if sensing_range <= 0:
        raise ValueError("sensing range must be positive")
    rx, ry = robot
    kept = tuple(p for p in frame.pedestrians
                 if math.hypot(p.position[0] - rx, p.position[1] - ry) <= sensing_range)
    return CrowdSnapshot(time=frame.time, pedestrians=kept)


def save_csv(dataset: TrajectoryDataset, path):
    """Canonical serialization: frame,ped_id,x,y with 6 fractional digits."""
    t0 = dataset.frames[0].time if dataset.frames else 0.0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "ped_id", "x", "y"])
        for f in dataset.frames:
            k = int(round((f.time - t0) / dataset.dt))
            for p in f.pedestrians:
                w.writerow([k, p.id, f"{p.position[0]:.6f}", f"{p.position[1]:.6f}"])


def load_csv(path, dt=0.1, name=None) -> TrajectoryDataset:
    """Inverse of save_csv; frame index times ``dt`` becomes the timestamp."""
    by_frame = {}
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["frame", "ped_id", "x", "y"]:
            raise ParseError(1, "expected header frame,ped_id,x,y")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                k, pid = int(row[0]), int(row[1])
                x, y = float(row[2]), float(row[3])
            except (ValueError, IndexError) as exc:
                raise ParseError(line_no, str(exc)) from None
            by_frame.setdefault(k, {})[pid] = (x, y)
    frames = tuple(
        CrowdSnapshot(time=k * dt,
                      pedestrians=tuple(Pedestrian(id=pid, position=np.array(pos),
                                                   velocity=np.zeros(2))
                                        for pid, pos in sorted(by_frame[k].items())))
        for k in sorted(by_frame))
    return TrajectoryDataset(name=name or str(path), frames=frames, dt=dt,
                             workspace=_workspace_of(frames))
