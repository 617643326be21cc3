"""Comparison planners: sampling-based generalized velocity obstacles and
the stop-or-drive wait-and-go strategy."""

import math
from dataclasses import dataclass

import numpy as np

from dynchan.crowd import CrowdSnapshot, Pedestrian
from dynchan.simulate import CarState, ControlInput, SimConfig, COLLISION_DIST


@dataclass(frozen=True)
class GvoConfig:
    time_horizon: float = 3.5
    samples_per_timestep: int = 40
    collision_check_hz: float = 10.0
    wheelbase: float = 1.0


def preferred_control(state: CarState, goal, v_max=1.2, wheelbase=1.0,
                      steering_max=0.6) -> ControlInput:
    """Drive straight at the goal as if there were no obstacles."""
    dx = goal[0] - state.x
    dy = goal[1] - state.y
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
    return ControlInput(speed=v_max, steering=steering)


def gvo_plan(state: CarState, crowd: CrowdSnapshot, goal, sim_cfg: SimConfig,
             v_max=1.2, seed=0, collision_radius=COLLISION_DIST) -> ControlInput:
    """Sample controls, simulate each over the horizon, keep the collision-free
    one closest to the preferred control; full stop when none is free."""
    rng = np.random.default_rng(seed)
    n = sim_cfg.gvo_samples
    speeds = rng.uniform(0.0, v_max, n)
    steers = rng.uniform(-sim_cfg.steering_max, sim_cfg.steering_max, n)

    dt = 1.0 / sim_cfg.gvo_check_hz
    steps = max(1, int(round(sim_cfg.gvo_time_horizon / dt)))
    # vectorized bicycle rollout mirroring step_car
    x = np.full(n, state.x)
    y = np.full(n, state.y)
    heading = np.full(n, state.heading)
    speed = np.full(n, state.speed)
    free = np.ones(n, dtype=bool)
    if len(crowd):
        ped_pos = crowd.positions()
        ped_vel = np.array([p.velocity for p in crowd.pedestrians])
    else:
        ped_pos = None
    for k in range(steps):
        speed = np.maximum(speed - sim_cfg.a_max * dt,
                           np.minimum(speed + sim_cfg.a_max * dt, speeds))
        x = x + speed * np.cos(heading) * dt
        y = y + speed * np.sin(heading) * dt
        heading = heading + (speed / sim_cfg.wheelbase) * np.tan(steers) * dt
        if ped_pos is not None:
            tau = (k + 1) * dt
            px = ped_pos[:, 0] + ped_vel[:, 0] * tau
            py = ped_pos[:, 1] + ped_vel[:, 1] * tau
            d2 = (x[:, None] - px[None, :]) ** 2 + (y[:, None] - py[None, :]) ** 2
            free &= np.min(d2, axis=1) >= collision_radius ** 2

    if not np.any(free):
        return ControlInput(speed=0.0, steering=0.0)
    pref = preferred_control(state, goal, v_max, sim_cfg.wheelbase, sim_cfg.steering_max)
    cost = ((speeds - pref.speed) / v_max) ** 2 \
         + ((steers - pref.steering) / sim_cfg.steering_max) ** 2
    cost[~free] = np.inf
    i = int(np.argmin(cost))
    return ControlInput(speed=float(speeds[i]), steering=float(steers[i]))


def velocity_obstacle_collision(robot_pos, robot_vel, ped: Pedestrian,
                                horizon, radius) -> bool:
    """True when the linearly extrapolated pair comes closer than ``radius``
    within the horizon (closed-form minimum of the relative quadratic)."""
    dp = np.asarray(robot_pos, dtype=float) - ped.position
    dv = np.asarray(robot_vel, dtype=float) - ped.velocity
    a = float(dv @ dv)
    if a <= 1e-15:
        return bool(dp @ dp < radius * radius)
    t_star = max(0.0, min(horizon, -float(dp @ dv) / a))
    closest = dp + dv * t_star
    return bool(closest @ closest < radius * radius)


def straight_line_blocked(pos, goal, crowd: CrowdSnapshot, v_max,
                          stop_distance, vo_horizon) -> bool:
    """Wait condition: a pedestrian too close, or a predicted collision along
    the straight goal-ward motion."""
    dx = goal[0] - pos[0]
    dy = goal[1] - pos[1]
    L = math.hypot(dx, dy)
    vel = (v_max * dx / L, v_max * dy / L) if L > 1e-9 else (0.0, 0.0)
    for p in crowd.pedestrians:
        d = math.hypot(pos[0] - p.position[0], pos[1] - p.position[1])
        if d < stop_distance:
            return True
        if velocity_obstacle_collision(pos, vel, p, vo_horizon, COLLISION_DIST):
            return True
    return False


def wait_and_go(state: CarState, crowd: CrowdSnapshot, goal,
                sim_cfg: SimConfig, v_max=1.2) -> ControlInput:
    """Drive straight at the goal; stop while a pedestrian is too close or a
    velocity-obstacle test predicts a collision."""
    u = preferred_control(state, goal, v_max, sim_cfg.wheelbase, sim_cfg.steering_max)
    if straight_line_blocked((state.x, state.y), goal, crowd, v_max,
                             sim_cfg.stop_distance, sim_cfg.vo_horizon):
        return ControlInput(speed=0.0, steering=u.steering)
    return u
