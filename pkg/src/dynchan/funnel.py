"""Shortest segment-arc path through a triangle channel with clearance circles.

Every wall vertex of the channel carries a clearance disc (radius zero by
default).  The shortest path inside the channel polygon that stays outside
all discs is a taut alternation of straight segments and arcs; left-wall
discs are rounded counterclockwise and right-wall discs clockwise.  We find
it exactly by running Dijkstra over the graph of oriented common tangents
between discs, keeping only tangents that stay inside the channel.
"""

import math
from dataclasses import dataclass, field
from heapq import heappush, heappop

import numpy as np

from dynchan.geometry import EPS_GEO, orient, segments_properly_cross, segment_point_distance
from dynchan.crowd import Pedestrian


class ChannelPinched(RuntimeError):
    """Some gate's usable width (length minus endpoint radii) is not positive."""


@dataclass(frozen=True)
class Segment:
    start: tuple
    end: tuple

    @property
    def length(self):
        return math.dist(self.start, self.end)


@dataclass(frozen=True)
class Arc:
    center: tuple
    radius: float
    start_angle: float
    end_angle: float
    ccw: bool

    @property
    def sweep(self):
        d = (self.end_angle - self.start_angle) if self.ccw else (self.start_angle - self.end_angle)
        d %= 2.0 * math.pi
        return d

    @property
    def length(self):
        return self.radius * self.sweep

    def point_at(self, angle):
        return (self.center[0] + self.radius * math.cos(angle),
                self.center[1] + self.radius * math.sin(angle))


@dataclass(frozen=True)
class SmoothPath:
    elements: tuple

    @property
    def length(self):
        return sum(e.length for e in self.elements)


def path_length(path: SmoothPath):
    """Total arc length of a segment-arc path."""
    return path.length


def sample_path(path: SmoothPath, spacing):
    """Points along the path at arc-length steps <= spacing, endpoints included."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    pts = []
    for elem in path.elements:
        L = elem.length
        n = max(1, math.ceil(L / spacing)) if L > 0 else 1
        if isinstance(elem, Segment):
            for k in range(n + 1):
                t = k / n
                pts.append(((1 - t) * elem.start[0] + t * elem.end[0],
                            (1 - t) * elem.start[1] + t * elem.end[1]))
        else:
            sgn = 1.0 if elem.ccw else -1.0
            for k in range(n + 1):
                ang = elem.start_angle + sgn * elem.sweep * k / n
                pts.append(elem.point_at(ang))
    # drop consecutive duplicates at element joints
    out = [pts[0]]
    for p in pts[1:]:
        if math.dist(p, out[-1]) > 1e-12:
            out.append(p)
    return out


def clearance_radius(ped: Pedestrian, gate_other_end, k, r_base):
    """Clearance radius around a pedestrian bounding a channel gate.

    Pedestrians moving toward the other gate endpoint are about to be passed
    in front and get extra room proportional to the closing speed; everyone
    else keeps the base radius.
    """
    e = np.asarray(gate_other_end, dtype=float) - ped.position
    norm = float(np.hypot(e[0], e[1]))
    if norm <= 0:
        return r_base
    v_along = float(ped.velocity @ e) / norm
    if v_along > 0:
        return r_base + k * v_along
    return r_base


@dataclass(frozen=True)
class _Disc:
    center: tuple
    radius: float
    winding: int      # +1 round CCW (left wall), -1 CW (right wall), 0 endpoint
    order: int        # first gate index where the disc appears


def sided_gates(channel, start):
    """Assign a (left, right) vertex orientation to each gate of a channel.

    Consecutive gates share exactly one vertex; the shared vertex keeps its
    side, the replaced side takes the new vertex.  The first gate is oriented
    by the travel direction out of the start point.
    """
    mesh = channel.mesh
    gates = channel.gates
    if not gates:
        return []
    u, v = gates[0]
    pu, pv = mesh.vertices[u], mesh.vertices[v]
    mid = 0.5 * (pu + pv)
    d = mid - np.asarray(start, dtype=float)
    if np.hypot(d[0], d[1]) <= EPS_GEO:
        d = mesh.vertices[list(set(mesh.triangles[channel.faces[1]]) - {u, v})[0]] - np.asarray(start)
    cross_u = d[0] * (pu[1] - start[1]) - d[1] * (pu[0] - start[0])
    left, right = (u, v) if cross_u > 0 else (v, u)
    sided = [(left, right)]
    for u2, v2 in gates[1:]:
        pair = {u2, v2}
        if left in pair:
            sided.append((left, (pair - {left}).pop()))
        elif right in pair:
            sided.append(((pair - {right}).pop(), right))
        else:
            raise ValueError("consecutive gates share no vertex; not a channel")
        left, right = sided[-1]
    return sided


def _tangent(c1, r1, w1, c2, r2, w2):
    """Directed tangent segment from disc 1 to disc 2 honoring both windings.

    Returns (t1, t2) tangent points or None when no such tangent exists.
    """
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    d = math.hypot(dx, dy)
    if d <= EPS_GEO:
        return None
    delta = (w2 * r2 - w1 * r1) / d
    if abs(delta) > 1.0:
        if abs(delta) > 1.0 + 1e-9:
            return None
        delta = math.copysign(1.0, delta)
    theta = math.atan2(dy, dx) - math.asin(delta)
    ux, uy = math.cos(theta), math.sin(theta)
    nx, ny = -uy, ux
    t1 = (c1[0] - w1 * r1 * nx, c1[1] - w1 * r1 * ny)
    t2 = (c2[0] - w2 * r2 * nx, c2[1] - w2 * r2 * ny)
    return t1, t2


def _channel_polygon(start, goal, sided, mesh):
    """Boundary ring of the channel polygon: start, left wall, goal, right wall."""
    left_wall, right_wall = [], []
    for l, r in sided:
        if not left_wall or left_wall[-1] != l:
            left_wall.append(l)
        if not right_wall or right_wall[-1] != r:
            right_wall.append(r)
    ring = [tuple(start)]
    ring += [tuple(mesh.vertices[i]) for i in left_wall]
    ring.append(tuple(goal))
    ring += [tuple(mesh.vertices[i]) for i in reversed(right_wall)]
    return ring


def _point_in_channel(p, tri_pts):
    """p inside any of the channel triangles (boundary inclusive)."""
    x, y = p
    for (a, b, c) in tri_pts:
        d0 = (b[0] - a[0]) * (y - a[1]) - (b[1] - a[1]) * (x - a[0])
        d1 = (c[0] - b[0]) * (y - b[1]) - (c[1] - b[1]) * (x - b[0])
        d2 = (a[0] - c[0]) * (y - c[1]) - (a[1] - c[1]) * (x - c[0])
        lo = -1e-9
        if d0 >= lo and d1 >= lo and d2 >= lo:
            return True
    return False


def funnel_shortest(channel, start, goal, radii=None) -> SmoothPath:
    """Shortest segment-arc path through a channel respecting clearance discs.

    ``radii`` maps mesh vertex index to clearance radius (missing = 0).
    Raises ChannelPinched when a gate's usable width is not positive or no
    disc-respecting path exists.
    """
    start = (float(start[0]), float(start[1]))
    goal = (float(goal[0]), float(goal[1]))
    radii = radii or {}
    mesh = channel.mesh
    sided = sided_gates(channel, start)
    if not sided:
        return SmoothPath(elements=(Segment(start, goal),))

    for idx, (l, r) in enumerate(sided):
        width = float(np.hypot(*(mesh.vertices[l] - mesh.vertices[r])))
        if width - radii.get(l, 0.0) - radii.get(r, 0.0) <= 0:
            raise ChannelPinched(f"gate {idx} usable width <= 0")

    # one disc per maximal run of a vertex on one wall
    discs = [_Disc(center=start, radius=0.0, winding=0, order=-1)]
    prev = {}
    for idx, (l, r) in enumerate(sided):
        for vid, w in ((l, 1), (r, -1)):
            if prev.get(w) != vid:
                discs.append(_Disc(center=tuple(mesh.vertices[vid]),
                                   radius=float(radii.get(vid, 0.0)),
                                   winding=w, order=idx))
                prev[w] = vid
    discs.append(_Disc(center=goal, radius=0.0, winding=0, order=len(sided)))
    goal_i = len(discs) - 1

    ring = _channel_polygon(start, goal, sided, mesh)
    walls = list(zip(ring, ring[1:] + ring[:1]))
    tri_pts = [tuple(map(tuple, mesh.triangle_points(f))) for f in channel.faces]

    def tangent_ok(t1, t2):
        for d in discs:
            if d.radius > 0 and segment_point_distance(t1, t2, d.center) < d.radius - 1e-9:
                return False
        for (qa, qb) in walls:
            if segments_properly_cross(t1, t2, qa, qb):
                return False
        mid = (0.5 * (t1[0] + t2[0]), 0.5 * (t1[1] + t2[1]))
        return _point_in_channel(mid, tri_pts)

    # oriented tangent edges between discs, path touches discs in channel order
    edges = []                      # (a, b, t1, t2, length)
    out_edges = {i: [] for i in range(len(discs))}
    for a, da in enumerate(discs):
        for b, db in enumerate(discs):
            if a == b or db.order < da.order:
                continue
            if a == goal_i or b == 0:
                continue
            t = _tangent(da.center, da.radius, da.winding, db.center, db.radius, db.winding)
            if t is None:
                continue
            t1, t2 = t
            if not tangent_ok(t1, t2):
                continue
            out_edges[a].append(len(edges))
            edges.append((a, b, t1, t2, math.dist(t1, t2)))

    # Dijkstra over tangent edges; arc cost joins consecutive tangents
    INF = math.inf
    best = {}
    heap = []
    for ei in out_edges[0]:
        heappush(heap, (edges[ei][4], ei))
        best[ei] = edges[ei][4]
    parent = {}
    final_edge = None
    while heap:
        cost, ei = heappop(heap)
        if cost > best.get(ei, INF):
            continue
        a, b, t1, t2, L = edges[ei]
        if b == goal_i:
            final_edge = ei
            break
        db = discs[b]
        ang_in = math.atan2(t2[1] - db.center[1], t2[0] - db.center[0])
        for ej in out_edges[b]:
            _, b2, s1, s2, L2 = edges[ej]
            if db.radius > 0:
                ang_out = math.atan2(s1[1] - db.center[1], s1[0] - db.center[0])
                sweep = ((ang_out - ang_in) * db.winding) % (2.0 * math.pi)
                arc_cost = db.radius * sweep
            else:
                arc_cost = 0.0
            nc = cost + arc_cost + L2
            if nc < best.get(ej, INF) - 1e-15:
                best[ej] = nc
                parent[ej] = ei
                heappush(heap, (nc, ej))
    if final_edge is None:
        raise ChannelPinched("no disc-respecting path through the channel")

    chain = [final_edge]
    while chain[-1] in parent:
        chain.append(parent[chain[-1]])
    chain.reverse()

    elements = []
    for k, ei in enumerate(chain):
        a, b, t1, t2, L = edges[ei]
        if k > 0:
            _, bp, _, tp2, _ = edges[chain[k - 1]]
            dp = discs[bp]
            if dp.radius > 0:
                a_in = math.atan2(tp2[1] - dp.center[1], tp2[0] - dp.center[0])
                a_out = math.atan2(t1[1] - dp.center[1], t1[0] - dp.center[0])
                sweep = ((a_out - a_in) * dp.winding) % (2.0 * math.pi)
                if sweep > 1e-12 and sweep < 2.0 * math.pi - 1e-9:
                    elements.append(Arc(center=dp.center, radius=dp.radius,
                                        start_angle=a_in, end_angle=a_out,
                                        ccw=dp.winding > 0))
        if L > 1e-12:
            elements.append(Segment(t1, t2))
    if not elements:
        elements = [Segment(start, goal)]
    return SmoothPath(elements=tuple(elements))
