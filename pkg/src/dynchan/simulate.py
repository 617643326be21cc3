"""Car-like robot simulation: kinematic bicycle, pure-pursuit tracking, and
the trial executor with the benchmark's success/collision semantics."""

import math
import time as _time
from dataclasses import dataclass, field, replace

import numpy as np

from dynchan.crowd import CrowdSnapshot, estimate_velocities
from dynchan.geometry import GeometryError
from dynchan import planner as _planner
from dynchan import funnel as _funnel

#: Center distance below which a collision is reported.
COLLISION_DIST = 1.0


class InvalidScenario(ValueError):
    pass


@dataclass(frozen=True)
class CarState:
    x: float
    y: float
    heading: float
    speed: float = 0.0

    @property
    def position(self):
        return (self.x, self.y)


@dataclass(frozen=True)
class ControlInput:
    speed: float          # m/s command
    steering: float       # rad


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.05
    replan_period: float = 0.05
    wheelbase: float = 1.0
    steering_max: float = 0.6
    a_max: float = 2.0
    timeout_factor: float = 4.0   # times the straight-line time at v_max
    stop_distance: float = 1.5    # wait-and-go proximity stop
    vo_horizon: float = 3.0       # wait-and-go velocity-obstacle lookahead
    gvo_time_horizon: float = 3.5
    gvo_samples: int = 40
    gvo_check_hz: float = 10.0
    sample_spacing: float = 0.2   # path discretization for tracking


def step_car(state: CarState, u: ControlInput, dt, wheelbase=1.0, a_max=2.0) -> CarState:
    """Kinematic bicycle update; speed changes are rate-limited by a_max."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    speed = max(state.speed - a_max * dt, min(state.speed + a_max * dt, u.speed))
    x = state.x + speed * math.cos(state.heading) * dt
    y = state.y + speed * math.sin(state.heading) * dt
    heading = state.heading + (speed / wheelbase) * math.tan(u.steering) * dt
    return CarState(x=x, y=y, heading=heading, speed=speed)


def pure_pursuit(state: CarState, path_samples, lookahead, v_max=1.2,
                 wheelbase=1.0, steering_max=0.6, goal_radius=0.5) -> ControlInput:
    """Steer at the first path point at least ``lookahead`` ahead of the
    closest path point; ramp the speed down near the path end."""
    if not len(path_samples):
        raise ValueError("empty path")
    pts = np.asarray(path_samples, dtype=float)
    pos = np.array([state.x, state.y])
    nearest = int(np.argmin(np.hypot(*(pts - pos).T)))
    target = pts[-1]
    acc = 0.0
    for i in range(nearest, len(pts) - 1):
        acc += float(np.hypot(*(pts[i + 1] - pts[i])))
        if acc >= lookahead:
            target = pts[i + 1]
            break
    dx, dy = target - pos
    L = math.hypot(dx, dy)
    if L < 1e-9:
        return ControlInput(speed=0.0, steering=0.0)
    alpha = math.atan2(dy, dx) - state.heading
    alpha = math.atan2(math.sin(alpha), math.cos(alpha))
    if abs(alpha) > math.pi / 2:
        steering = math.copysign(steering_max, alpha if alpha != 0 else 1.0)
    else:
        steering = math.atan(2.0 * wheelbase * math.sin(alpha) / L)
        steering = max(-steering_max, min(steering_max, steering))
    to_end = float(np.hypot(*(pts[-1] - pos)))
    speed = v_max
    if to_end < 3.0 * goal_radius:
        speed = v_max * max(0.15, to_end / (3.0 * goal_radius))
    return ControlInput(speed=speed, steering=steering)


@dataclass(frozen=True)
class TrialResult:
    outcome: str                  # "success" | "collision" | "timeout"
    travel_time: float
    planning_times: tuple         # seconds per planning cycle
    min_clearance: float
    peds_per_frame: float = 0.0   # mean pedestrians visible per sim step

    def __post_init__(self):
        if self.outcome not in ("success", "collision", "timeout"):
            raise ValueError(f"bad outcome {self.outcome}")


class DynamicChannelsController:
    """Replans a channel + funnel path every cycle and tracks it."""

    def __init__(self, goal, plan_cfg: _planner.PlannerConfig, sim_cfg: SimConfig,
                 workspace):
        self.goal = goal
        self.plan_cfg = plan_cfg
        self.sim_cfg = sim_cfg
        self.workspace = workspace
        self.path = [goal]
        self.safety_stop = False

    def replan(self, state: CarState, crowd: CrowdSnapshot):
        from dynchan import baselines as _b

        pos = (state.x, state.y)
        self.safety_stop = False
        ws = _expand_workspace(self.workspace, pos, self.goal)
        try:
            mesh, dual, kept = _planner.planning_scene(crowd, ws)
        except GeometryError:
            # no triangulation possible: straight line plus safety stop
            self.path = [pos, self.goal]
            self.safety_stop = _b.straight_line_blocked(
                pos, self.goal, crowd, self.plan_cfg.v_max,
                self.sim_cfg.stop_distance, self.sim_cfg.vo_horizon)
            return
        banned = set()
        for _ in range(4):
            try:
                channel = _planner.timed_astar(mesh, dual, kept, pos, self.goal,
                                               self.plan_cfg, frozenset(banned))
            except _planner.RobotOutsideHull:
                self.path = [pos, self.goal]
                self.safety_stop = _b.straight_line_blocked(
                    pos, self.goal, crowd, self.plan_cfg.v_max,
                    self.sim_cfg.stop_distance, self.sim_cfg.vo_horizon)
                return
            except _planner.NoPath:
                self.safety_stop = True
                return
            radii = _planner.assign_clearances(channel, kept, self.plan_cfg)
            _shrink_clearances(radii, channel, pos, self.goal)
            try:
                path = _funnel.funnel_shortest(channel, pos, self.goal, radii)
            except _funnel.ChannelPinched:
                if channel.gates:
                    banned.add(min(channel.gates,
                                   key=lambda g: _gate_usable(channel, g, radii)))
                    continue
                self.safety_stop = True
                return
            self.path = _funnel.sample_path(path, self.sim_cfg.sample_spacing)
            return
        self.safety_stop = True

    def control(self, state: CarState):
        if self.safety_stop:
            return ControlInput(speed=0.0, steering=0.0)
        return pure_pursuit(state, self.path, self.plan_cfg.lookahead,
                            v_max=self.plan_cfg.v_max,
                            wheelbase=self.sim_cfg.wheelbase,
                            steering_max=self.sim_cfg.steering_max,
                            goal_radius=self.plan_cfg.goal_radius)


def _gate_usable(channel, gate, radii):
    a, b = gate
    width = float(np.hypot(*(channel.mesh.vertices[a] - channel.mesh.vertices[b])))
    return width - radii.get(a, 0.0) - radii.get(b, 0.0)


def _shrink_clearances(radii, channel, start, goal):
    """Shrink discs that would swallow the start or goal point."""
    for vid, r in list(radii.items()):
        c = channel.mesh.vertices[vid]
        for p in (start, goal):
            d = math.hypot(p[0] - c[0], p[1] - c[1])
            if d <= r:
                radii[vid] = max(0.0, d - 1e-6)


def _expand_workspace(ws, *points, margin=0.5):
    xmin, ymin, xmax, ymax = ws
    for (x, y) in points:
        xmin = min(xmin, x - margin)
        xmax = max(xmax, x + margin)
        ymin = min(ymin, y - margin)
        ymax = max(ymax, y + margin)
    return (xmin, ymin, xmax, ymax)


def run_trial(scenario, planner_kind, plan_cfg: _planner.PlannerConfig = None,
              sim_cfg: SimConfig = None, seed=0, measure_time=True) -> TrialResult:
    """Execute one navigation trial.

    ``planner_kind`` is one of "dynamic_channels", "gvo", "wait_and_go".
    Deterministic given (scenario, configs, seed).
    """
    from dynchan import baselines as _b
    from dynchan.datasets import sensing_filter

    plan_cfg = plan_cfg or _planner.PlannerConfig()
    sim_cfg = sim_cfg or SimConfig()
    frames = scenario.dataset.frames
    if not frames:
        raise InvalidScenario("dataset has no frames")
    frame_dt = scenario.dataset.dt
    n_frames = len(frames)
    start = tuple(map(float, scenario.start))
    goal = tuple(map(float, scenario.goal))
    if math.dist(start, goal) <= 1e-9:
        raise InvalidScenario("start equals goal")

    heading0 = math.atan2(goal[1] - start[1], goal[0] - start[0])
    state = CarState(x=start[0], y=start[1], heading=heading0, speed=0.0)
    timeout = sim_cfg.timeout_factor * math.dist(start, goal) / plan_cfg.v_max
    rng = np.random.default_rng(seed)

    controller = None
    if planner_kind == "dynamic_channels":
        controller = DynamicChannelsController(goal, plan_cfg, sim_cfg,
                                               scenario.dataset.workspace)
    elif planner_kind not in ("gvo", "wait_and_go"):
        raise InvalidScenario(f"unknown planner {planner_kind!r}")

    t = 0.0
    next_replan = 0.0
    control = ControlInput(speed=0.0, steering=0.0)
    planning_times = []
    min_clearance = math.inf
    peds_seen = []
    outcome = "timeout"

    while t < timeout:
        k = scenario.start_frame + int(round(t / frame_dt))
        curr = frames[k % n_frames]
        prev = frames[(k - 1) % n_frames]
        crowd = estimate_velocities(
            CrowdSnapshot(time=curr.time - frame_dt, pedestrians=prev.pedestrians),
            CrowdSnapshot(time=curr.time, pedestrians=curr.pedestrians))
        visible = sensing_filter(crowd, (state.x, state.y), scenario.sensing_range)
        peds_seen.append(len(visible))

        if t + 1e-9 >= next_replan:
            next_replan += sim_cfg.replan_period
            t0 = _time.perf_counter() if measure_time else 0.0
            if planner_kind == "dynamic_channels":
                controller.replan(state, visible)
                control = controller.control(state)
            elif planner_kind == "gvo":
                control = _b.gvo_plan(state, visible, goal, sim_cfg, plan_cfg.v_max,
                                      int(rng.integers(0, 2**31)))
            else:
                control = _b.wait_and_go(state, visible, goal, sim_cfg, plan_cfg.v_max)
            if measure_time:
                planning_times.append(_time.perf_counter() - t0)
            else:
                planning_times.append(0.0)
        elif planner_kind == "dynamic_channels":
            control = controller.control(state)

        state = step_car(state, control, sim_cfg.dt,
                         wheelbase=sim_cfg.wheelbase, a_max=sim_cfg.a_max)
        t += sim_cfg.dt

        if len(visible):
            d = float(np.min(np.hypot(*(visible.positions()
                                        - np.array([state.x, state.y])).T)))
            min_clearance = min(min_clearance, d)
            if d < COLLISION_DIST:
                outcome = "collision"
                break
        if math.dist((state.x, state.y), goal) <= plan_cfg.goal_radius:
            outcome = "success"
            break

    # the trial timer keeps running on failure: failed trials are charged
    # the full timeout duration
    travel_time = t if outcome == "success" else timeout
    return TrialResult(outcome=outcome, travel_time=travel_time,
                       planning_times=tuple(planning_times),
                       min_clearance=min_clearance,
                       peds_per_frame=float(np.mean(peds_seen)) if peds_seen else 0.0)
