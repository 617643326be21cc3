"""Pedestrian state, the linear motion model, and gate feasibility intervals.

A gate between pedestrians i and j is crossable at time tau when their
distance D(tau) is at least the width threshold.  Under linear motion
D(tau)^2 is an upward parabola, so the feasible set is a union of at most
two intervals.
"""

import math
from dataclasses import dataclass, field

import numpy as np

INF = math.inf

#: Discriminants smaller than this are treated as the tangent case.
EPS_DISC = 1e-12

DEFAULT_HORIZON = 60.0


class NonMonotonicTime(ValueError):
    pass


@dataclass(frozen=True)
class Pedestrian:
    id: int
    position: np.ndarray   # (2,) m
    velocity: np.ndarray   # (2,) m/s
    radius: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))

    def at(self, tau):
        """Linearly propagated position at time tau."""
        return self.position + self.velocity * tau


@dataclass(frozen=True)
class CrowdSnapshot:
    time: float
    pedestrians: tuple

    def __post_init__(self):
        object.__setattr__(self, "pedestrians", tuple(self.pedestrians))
        ids = [p.id for p in self.pedestrians]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate pedestrian ids in snapshot")

    def by_id(self):
        return {p.id: p for p in self.pedestrians}

    def positions(self):
        if not self.pedestrians:
            return np.zeros((0, 2))
        return np.array([p.position for p in self.pedestrians])

    def __len__(self):
        return len(self.pedestrians)


@dataclass(frozen=True)
class FeasibleIntervals:
    """Sorted disjoint [lo, hi] intervals; hi may be +inf."""

    intervals: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple((float(a), float(b)) for a, b in self.intervals))
        prev = -INF
        for a, b in self.intervals:
            if a < 0 or b < a or a < prev:
                raise ValueError(f"malformed intervals {self.intervals}")
            prev = b

    def contains(self, t, tol=0.0):
        return any(a - tol <= t <= b + tol for a, b in self.intervals)

    @property
    def empty(self):
        return not self.intervals


def d_thresh(r_obs, s_safe):
    """Minimum gate width for safe passage: 2 * (r_obs + s_safe)."""
    return 2.0 * (r_obs + s_safe)


def gate_distance(pi: Pedestrian, pj: Pedestrian, tau):
    """Distance between two linearly moving pedestrians at time tau."""
    d = pi.at(tau) - pj.at(tau)
    return float(np.hypot(d[0], d[1]))


def feasible_intervals(pi: Pedestrian, pj: Pedestrian, d_th, horizon=DEFAULT_HORIZON) -> FeasibleIntervals:
    """Times in [0, horizon] at which the gate i-j is at least d_th wide.

    Solves a*tau^2 + b*tau + c >= d_th^2 with a = |dv|^2, b = 2 dp.dv,
    c = |dp|^2.  A final interval that is still feasible at the horizon is
    returned open-ended as [t, +inf).
    """
    dp = pi.position - pj.position
    dv = pi.velocity - pj.velocity
    a = float(dv @ dv)
    b = 2.0 * float(dp @ dv)
    c = float(dp @ dp)
    k = c - d_th * d_th

    if a <= EPS_DISC:
        # identical velocities: constant distance
        return FeasibleIntervals(((0.0, INF),) if k >= 0 else ())

    disc = b * b - 4.0 * a * k
    if disc <= EPS_DISC:
        # no real roots, or tangent: never strictly below threshold
        return FeasibleIntervals(((0.0, INF),))
    s = math.sqrt(disc)
    t1 = (-b - s) / (2.0 * a)
    t2 = (-b + s) / (2.0 * a)

    raw = []
    if t1 > 0:
        raw.append((0.0, t1))
    if t2 < 0:
        raw.append((0.0, INF))
    else:
        raw.append((max(t2, 0.0), INF))
    # merge the degenerate case t1 <= 0 handled above; clip to horizon
    out = []
    for lo, hi in raw:
        if lo > horizon:
            continue
        if hi >= horizon:
            hi = INF
        out.append((lo, hi))
    # adjacent intervals cannot overlap here (t1 < t2), but [0,t1] and
    # [t2,inf) may both collapse onto [0,inf) after clipping
    if len(out) == 2 and out[0][1] == INF:
        out = [(0.0, INF)]
    return FeasibleIntervals(tuple(out))


def estimate_velocities(prev: CrowdSnapshot, curr: CrowdSnapshot) -> CrowdSnapshot:
    """Finite-difference velocities between consecutive frames.

    Pedestrians appearing only in ``curr`` get zero velocity.
    """
    dt = curr.time - prev.time
    if dt <= 0:
        raise NonMonotonicTime(f"dt = {dt}")
    prev_by_id = prev.by_id()
    peds = []
    for p in curr.pedestrians:
        q = prev_by_id.get(p.id)
        vel = (p.position - q.position) / dt if q is not None else np.zeros(2)
        peds.append(Pedestrian(id=p.id, position=p.position, velocity=vel, radius=p.radius))
    return CrowdSnapshot(time=curr.time, pedestrians=tuple(peds))
