"""Timed search over the triangulation dual graph.

Search states live on gates: each expansion places a crossing point on the
entered gate (pulled toward the goal, clamped for clearance), estimates the
arrival time there from the robot's speed limit and a turn penalty, and
requires the gate to be wide enough at that arrival time.  The result is a
loop-free triangle walk (a channel) whose every gate passes the width test
at its estimated crossing time.

Small meshes are searched exhaustively over loop-free walks so the returned
channel is length-optimal (ranked by its zero-clearance funnel path); large
meshes fall back to best-first search with node reopening.
"""

import math
from dataclasses import dataclass, field
from heapq import heappush, heappop

import numpy as np

from dynchan.geometry import (OUTER, TriMesh, DualGraph, locate_point, circumcircle,
                              segment_point_distance, EPS_GEO)
from dynchan.crowd import Pedestrian, CrowdSnapshot, d_thresh, feasible_intervals
from dynchan import funnel as _funnel


class NoPath(RuntimeError):
    """Every route to the goal is blocked by infeasible gates."""


class GateTooNarrow(ValueError):
    pass


class RobotOutsideHull(RuntimeError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    v_max: float = 1.2            # m/s, slightly under walking speed
    r_obs: float = 0.5            # pedestrian radius expanded by robot radius
    s_safe: float = 0.2           # extra safety margin, m
    horizon: float = 60.0         # s; gates reached later skip the width test
    k_clearance: float = 0.5      # extra clearance per m/s of closing speed
    goal_radius: float = 0.5      # m
    lookahead: float = 1.5        # m, pure-pursuit
    turn_floor: float = 0.25      # lower bound on the turn speed factor
    exact_face_limit: int = 30    # exhaustive channel search up to this size

    @property
    def d_thresh(self):
        return d_thresh(self.r_obs, self.s_safe)

    @property
    def clearance(self):
        return self.r_obs + self.s_safe


@dataclass(frozen=True)
class Channel:
    """Loop-free dual walk: ordered faces, the gates between them, and the
    crossing points placed during search."""

    faces: tuple
    gates: tuple                  # sorted vertex index pairs
    node_points: tuple            # placed crossing point per gate
    mesh: TriMesh = field(repr=False)
    start: tuple = (0.0, 0.0)
    goal: tuple = (0.0, 0.0)

    def __post_init__(self):
        if len(set(self.faces)) != len(self.faces):
            raise ValueError("channel repeats a face")


def vertex_pedestrian(mesh: TriMesh, crowd: CrowdSnapshot, idx, r_obs=0.5):
    """Pedestrian behind mesh vertex idx.

    The planning mesh is built from the snapshot's pedestrian positions in
    order, followed by static virtual corner points.
    """
    if idx < len(crowd.pedestrians):
        return crowd.pedestrians[idx]
    return Pedestrian(id=-(idx + 1), position=mesh.vertices[idx],
                      velocity=np.zeros(2), radius=r_obs)


def place_node(gate_a, gate_b, from_pt, target, clearance):
    """Crossing point on the gate segment, pulled toward the from->target
    segment and clamped to keep ``clearance`` from both gate endpoints."""
    ax, ay = float(gate_a[0]), float(gate_a[1])
    bx, by = float(gate_b[0]), float(gate_b[1])
    L = math.hypot(bx - ax, by - ay)
    if L <= 2.0 * clearance:
        raise GateTooNarrow(f"gate length {L} <= 2 * clearance {clearance}")
    lo, hi = clearance / L, 1.0 - clearance / L

    fx, fy = float(from_pt[0]), float(from_pt[1])
    tx, ty = float(target[0]), float(target[1])

    def gate_pt(t):
        return (ax + t * (bx - ax), ay + t * (by - ay))

    def dist_to_target_seg(p):
        return segment_point_distance((fx, fy), (tx, ty), p)

    # candidate minimizers of the (convex) distance along the gate
    cands = [0.0, 1.0]
    gx, gy = bx - ax, by - ay
    g2 = gx * gx + gy * gy
    for px, py in ((fx, fy), (tx, ty)):
        cands.append(((px - ax) * gx + (py - ay) * gy) / g2)
    inter = _segment_intersection_param(ax, ay, bx, by, fx, fy, tx, ty)
    if inter is not None:
        cands.append(inter)
    t_best = min((max(0.0, min(1.0, t)) for t in cands),
                 key=lambda t: dist_to_target_seg(gate_pt(t)))
    t_best = max(lo, min(hi, t_best))
    return gate_pt(t_best)


def _segment_intersection_param(ax, ay, bx, by, cx, cy, dx, dy):
    """Parameter on segment ab of its intersection with segment cd, if any."""
    rx, ry = bx - ax, by - ay
    sx, sy = dx - cx, dy - cy
    denom = rx * sy - ry * sx
    if abs(denom) <= 1e-15:
        return None
    t = ((cx - ax) * sy - (cy - ay) * sx) / denom
    u = ((cx - ax) * ry - (cy - ay) * rx) / denom
    if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
        return t
    return None


def interpolate_velocity(face, mesh: TriMesh, crowd: CrowdSnapshot):
    """Velocity of a triangle node: mean of its three vertex velocities."""
    v = np.zeros(2)
    for idx in mesh.triangles[face]:
        if idx < len(crowd.pedestrians):
            v += crowd.pedestrians[idx].velocity
    return v / 3.0


@dataclass(frozen=True)
class _State:
    placed: tuple       # point on the entry gate (start point for the root)
    advanced: tuple     # placed point advanced to tau by the node velocity
    tau: float
    direction: tuple | None


def eta(parent: _State, placed, config: PlannerConfig):
    """Arrival time at ``placed``: parent tau plus distance over the
    turn-penalized speed v_max * max(turn_floor, cos(theta/2))."""
    dx = placed[0] - parent.advanced[0]
    dy = placed[1] - parent.advanced[1]
    dist = math.hypot(dx, dy)
    if dist <= 1e-12:
        return parent.tau
    if parent.direction is None:
        factor = 1.0
    else:
        ux, uy = parent.direction
        cos_t = max(-1.0, min(1.0, (ux * dx + uy * dy) / dist))
        factor = max(config.turn_floor, math.cos(math.acos(cos_t) / 2.0))
    return parent.tau + dist / (config.v_max * factor)


def _step(state: _State, gate, enter_face, mesh, crowd, config, goal):
    """Advance the search state across a gate into ``enter_face``."""
    a, b = gate
    pa, pb = mesh.vertices[a], mesh.vertices[b]
    try:
        placed = place_node(pa, pb, state.advanced, goal, config.clearance)
    except GateTooNarrow:
        placed = (0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]))
    tau = eta(state, placed, config)
    if enter_face == OUTER:
        vel = (0.0, 0.0)
    else:
        v = interpolate_velocity(enter_face, mesh, crowd)
        vel = (v[0], v[1])
    advanced = (placed[0] + vel[0] * tau, placed[1] + vel[1] * tau)
    dx = placed[0] - state.advanced[0]
    dy = placed[1] - state.advanced[1]
    dist = math.hypot(dx, dy)
    direction = (dx / dist, dy / dist) if dist > 1e-12 else state.direction
    return _State(placed=placed, advanced=advanced, tau=tau, direction=direction)


class _GateOracle:
    """Caches per-gate feasible intervals for one snapshot."""

    def __init__(self, mesh, crowd, config):
        self.mesh = mesh
        self.crowd = crowd
        self.config = config
        self._cache = {}

    def feasible_at(self, gate, tau):
        if tau > self.config.horizon:
            return True     # safety check released beyond the horizon
        iv = self._cache.get(gate)
        if iv is None:
            pi = vertex_pedestrian(self.mesh, self.crowd, gate[0], self.config.r_obs)
            pj = vertex_pedestrian(self.mesh, self.crowd, gate[1], self.config.r_obs)
            iv = feasible_intervals(pi, pj, self.config.d_thresh, self.config.horizon)
            self._cache[gate] = iv
        return iv.contains(tau, tol=1e-9)


def timed_astar(mesh: TriMesh, dual: DualGraph, crowd: CrowdSnapshot, start, goal,
                config: PlannerConfig, banned_gates=frozenset()) -> Channel:
    """Search the dual graph for a gate-feasible loop-free channel.

    Raises NoPath when every route is blocked, RobotOutsideHull when start or
    goal is outside the triangulated region.
    """
    start = (float(start[0]), float(start[1]))
    goal = (float(goal[0]), float(goal[1]))
    start_face = locate_point(mesh, start)
    goal_face = locate_point(mesh, goal)
    if start_face == OUTER or goal_face == OUTER:
        raise RobotOutsideHull("start or goal outside the triangulation hull")
    if start_face == goal_face:
        return Channel(faces=(start_face,), gates=(), node_points=(), mesh=mesh,
                       start=start, goal=goal)

    oracle = _GateOracle(mesh, crowd, config)
    root = _State(placed=start, advanced=start, tau=0.0, direction=None)
    if mesh.n_triangles <= config.exact_face_limit:
        return _search_exact(mesh, dual, crowd, start, goal, config,
                             start_face, goal_face, oracle, root, banned_gates)
    return _search_best_first(mesh, dual, crowd, start, goal, config,
                              start_face, goal_face, oracle, root, banned_gates)


def _search_exact(mesh, dual, crowd, start, goal, config,
                  start_face, goal_face, oracle, root, banned):
    """Enumerate loop-free channels, rank by zero-clearance funnel length."""
    best = [math.inf, None]

    def gate_bound(gate):
        pa, pb = mesh.vertices[gate[0]], mesh.vertices[gate[1]]
        return (segment_point_distance(pa, pb, start)
                + segment_point_distance(pa, pb, goal))

    def recurse(face, state, faces, gates, nodes, visited, lb):
        for nbr, gate in dual.neighbors(face):
            if nbr == OUTER or nbr in visited or gate in banned:
                continue
            child = _step(state, gate, nbr, mesh, crowd, config, goal)
            if not oracle.feasible_at(gate, child.tau):
                continue
            lb2 = max(lb, gate_bound(gate))
            if lb2 >= best[0] - 1e-12:
                continue
            faces.append(nbr)
            gates.append(gate)
            nodes.append(child.placed)
            if nbr == goal_face:
                cand = Channel(faces=tuple(faces), gates=tuple(gates),
                               node_points=tuple(nodes), mesh=mesh,
                               start=start, goal=goal)
                try:
                    length = _funnel.funnel_shortest(cand, start, goal).length
                except _funnel.ChannelPinched:
                    length = math.inf
                if length < best[0]:
                    best[0] = length
                    best[1] = cand
            else:
                visited.add(nbr)
                recurse(nbr, child, faces, gates, nodes, visited, lb2)
                visited.discard(nbr)
            faces.pop()
            gates.pop()
            nodes.pop()

    recurse(start_face, root, [start_face], [], [], {start_face}, 0.0)
    if best[1] is None:
        raise NoPath("no gate-feasible channel to the goal")
    return best[1]


@dataclass
class _Node:
    face: int
    state: _State
    g: float
    h: float
    gate: tuple | None
    parent: object


def _search_best_first(mesh, dual, crowd, start, goal, config,
                       start_face, goal_face, oracle, root_state, banned):
    """Best-first search in time units with f-based node reopening."""
    root = _Node(face=start_face, state=root_state, g=0.0,
                 h=math.dist(start, goal) / config.v_max, gate=None, parent=None)
    counter = 0
    heap = [(root.g + root.h, root.h, start_face, 0, root)]
    closed = {}
    while heap:
        f, _, _, _, node = heappop(heap)
        prev = closed.get(node.face)
        if prev is not None and f >= prev - 1e-12:
            continue
        closed[node.face] = f
        if node.face == goal_face:
            return _extract_channel(node, mesh, start, goal)
        chain_faces = _chain_faces(node)
        for nbr, gate in dual.neighbors(node.face):
            if nbr == OUTER or gate in banned or nbr in chain_faces:
                continue
            child_state = _step(node.state, gate, nbr, mesh, crowd, config, goal)
            if not oracle.feasible_at(gate, child_state.tau):
                continue
            h = math.dist(child_state.advanced, goal) / config.v_max
            child = _Node(face=nbr, state=child_state, g=child_state.tau,
                          h=h, gate=gate, parent=node)
            cf = child.g + child.h
            prev = closed.get(nbr)
            if prev is not None and cf >= prev - 1e-12:
                continue
            counter += 1
            heappush(heap, (cf, h, nbr, counter, child))
    raise NoPath("no gate-feasible channel to the goal")


def _chain_faces(node):
    faces = set()
    while node is not None:
        faces.add(node.face)
        node = node.parent
    return faces


def _extract_channel(node, mesh, start, goal):
    faces, gates, points = [], [], []
    while node is not None:
        faces.append(node.face)
        if node.gate is not None:
            gates.append(node.gate)
            points.append(node.state.placed)
        node = node.parent
    faces.reverse()
    gates.reverse()
    points.reverse()
    return Channel(faces=tuple(faces), gates=tuple(gates),
                   node_points=tuple(points), mesh=mesh, start=start, goal=goal)


def validate_channel(channel: Channel, crowd: CrowdSnapshot, config: PlannerConfig) -> bool:
    """Recompute every gate's arrival time along the channel and re-check the
    width condition.  True for the empty channel."""
    mesh = channel.mesh
    oracle = _GateOracle(mesh, crowd, config)
    state = _State(placed=channel.start, advanced=channel.start, tau=0.0, direction=None)
    for gate, face in zip(channel.gates, channel.faces[1:]):
        state = _step(state, gate, face, mesh, crowd, config, channel.goal)
        if not oracle.feasible_at(gate, state.tau):
            return False
    return True


def local_clearance(mesh: TriMesh, robot):
    """Pedestrian-free circle around the robot: the circumcircle of its
    containing triangle (empty by the Delaunay property)."""
    face = locate_point(mesh, robot)
    if face == OUTER:
        raise RobotOutsideHull(f"robot at {tuple(robot)} outside the hull")
    a, b, c = mesh.triangle_points(face)
    return circumcircle(a, b, c)


def assign_clearances(channel: Channel, crowd: CrowdSnapshot, config: PlannerConfig):
    """Clearance radius per channel vertex: base clearance, grown for
    pedestrians closing on the gate (max over the vertex's gates)."""
    radii = {}
    r_base = config.clearance
    for a, b in channel.gates:
        for vid, other in ((a, b), (b, a)):
            ped = vertex_pedestrian(channel.mesh, crowd, vid, config.r_obs)
            r = _funnel.clearance_radius(ped, channel.mesh.vertices[other],
                                         config.k_clearance, r_base)
            radii[vid] = max(radii.get(vid, 0.0), r)
    return radii


def planning_scene(crowd: CrowdSnapshot, workspace):
    """Mesh and dual for one planning cycle.

    The triangulated points are the snapshot's pedestrian positions in order,
    followed by four static virtual corner pedestrians at the workspace
    corners.  Pedestrians closer than the duplicate tolerance to each other
    or to a corner are dropped; returns (mesh, dual, filtered crowd).
    """
    from dynchan.geometry import triangulate, dual_graph, EPS_DUP

    xmin, ymin, xmax, ymax = workspace
    corners = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
    kept = []
    pts = []
    for p in crowd.pedestrians:
        x, y = p.position
        if any(math.hypot(x - q[0], y - q[1]) <= EPS_DUP for q in pts):
            continue
        if any(math.hypot(x - cx, y - cy) <= EPS_DUP for cx, cy in corners):
            continue
        kept.append(p)
        pts.append((x, y))
    pts.extend(corners)
    mesh = triangulate(np.array(pts))
    dual = dual_graph(mesh)
    return mesh, dual, CrowdSnapshot(time=crowd.time, pedestrians=tuple(kept))
