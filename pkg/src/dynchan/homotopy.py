"""Paths as dual-graph walks: crossing sequences, parity reduction, cuts.

A polyline through the triangulation determines the ordered sequence of
edges it crosses, hence a walk on the dual graph.  Two paths with the same
endpoints are homotopic (deformable into each other without passing through
a vertex) exactly when their parity-reduced walks coincide.  A reduced
outer-to-outer walk determines a two-part vertex cut whose cut-set is the
crossed edge set.
"""

from dataclasses import dataclass

import numpy as np

from dynchan.geometry import OUTER, TriMesh, DualGraph, locate_point, orient, EPS_GEO


class DegenerateCrossing(ValueError):
    """Polyline passes through (or too close to) a mesh vertex."""


class NotACycle(ValueError):
    pass


@dataclass(frozen=True)
class Walk:
    """Alternating dual nodes and crossed triangulation edges."""

    nodes: tuple        # face ids (OUTER allowed)
    edges: tuple        # sorted vertex index pairs, len(nodes) - 1

    def __post_init__(self):
        if len(self.nodes) != len(self.edges) + 1:
            raise ValueError("walk length mismatch")


@dataclass(frozen=True)
class Cut:
    """Two-part vertex partition; cut_set holds the straddling edges."""

    plus: frozenset
    minus: frozenset
    cut_set: frozenset

    @property
    def trivial(self):
        return not self.plus or not self.minus


def path_to_walk(polyline, mesh: TriMesh, dual: DualGraph) -> Walk:
    """Walk determined by a polyline: ordered gate crossings with the faces
    between them.  The polyline must stay clear of mesh vertices."""
    pts = [np.asarray(p, dtype=float) for p in polyline]
    if len(pts) < 2:
        raise ValueError("polyline needs at least two points")
    node = locate_point(mesh, pts[0])
    nodes = [node]
    edges = []
    edge_list = list(mesh.edges.keys())
    verts = mesh.vertices
    for a, b in zip(pts[:-1], pts[1:]):
        crossings = []
        seg_len = np.hypot(*(b - a))
        if seg_len <= EPS_GEO:
            continue
        for (u, v) in edge_list:
            pu, pv = verts[u], verts[v]
            hit = _proper_intersection(a, b, pu, pv)
            if hit is None:
                continue
            t, s = hit
            edge_len = np.hypot(*(pv - pu))
            if min(s, 1.0 - s) * edge_len < 1e-9:
                raise DegenerateCrossing(f"polyline passes through vertex of edge {(u, v)}")
            crossings.append((t, (u, v)))
        crossings.sort()
        for _, edge in crossings:
            node = _cross(node, edge, mesh)
            nodes.append(node)
            edges.append(edge)
    return Walk(nodes=tuple(nodes), edges=tuple(edges))


def _proper_intersection(a, b, c, d):
    """Params (t on ab, s on cd) of a proper crossing, else None."""
    r = b - a
    s = d - c
    denom = r[0] * s[1] - r[1] * s[0]
    if abs(denom) <= 1e-15:
        return None
    q = c - a
    t = (q[0] * s[1] - q[1] * s[0]) / denom
    u = (q[0] * r[1] - q[1] * r[0]) / denom
    if 1e-12 < t < 1 - 1e-12 and 0.0 <= u <= 1.0:
        return t, u
    return None


def _cross(node, edge, mesh):
    faces = mesh.edges[edge]
    if len(faces) == 1:
        (f,) = faces
        if node == f:
            return OUTER
        if node == OUTER:
            return f
        raise DegenerateCrossing(f"crossing of {edge} inconsistent with face {node}")
    a, b = faces
    if node == a:
        return b
    if node == b:
        return a
    raise DegenerateCrossing(f"crossing of {edge} inconsistent with face {node}")


def reduce_walk(walk: Walk) -> Walk:
    """Cancel adjacent same-edge crossing pairs until none remain."""
    nodes = [walk.nodes[0]]
    edges = []
    for edge, node in zip(walk.edges, walk.nodes[1:]):
        if edges and edges[-1] == edge:
            edges.pop()
            nodes.pop()
        else:
            edges.append(edge)
            nodes.append(node)
    return Walk(nodes=tuple(nodes), edges=tuple(edges))


def walk_to_cut(walk: Walk, mesh: TriMesh, dual: DualGraph) -> Cut:
    """Vertex partition whose cut-set is exactly the walk's crossed gates.

    The walk must be reduced, loop-free apart from its endpoints, and begin
    and end at the outer node.
    """
    if walk.nodes[0] != OUTER or walk.nodes[-1] != OUTER:
        raise NotACycle("walk must start and end at the outer node")
    interior = walk.nodes[1:-1]
    if len(set(interior)) != len(interior) or OUTER in interior:
        raise NotACycle("walk revisits a node")
    crossed = set(walk.edges)
    if not crossed:
        return Cut(plus=frozenset(range(mesh.n_vertices)), minus=frozenset(),
                   cut_set=frozenset())

    adj = {i: set() for i in range(mesh.n_vertices)}
    for (u, v) in mesh.edges:
        if (u, v) not in crossed:
            adj[u].add(v)
            adj[v].add(u)
    seen = set()
    components = []
    for v0 in range(mesh.n_vertices):
        if v0 in seen:
            continue
        comp = {v0}
        stack = [v0]
        seen.add(v0)
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    stack.append(w)
        components.append(comp)
    if len(components) != 2:
        raise NotACycle(f"crossed edges split the mesh into {len(components)} parts")
    plus, minus = sorted(components, key=min)
    cut_set = frozenset((u, v) for (u, v) in mesh.edges
                        if (u in plus) != (v in plus))
    return Cut(plus=frozenset(plus), minus=frozenset(minus), cut_set=cut_set)


def walk_representative(walk: Walk, mesh: TriMesh, eps=1e-4):
    """A polyline whose crossing sequence realizes the walk.

    Each gate is crossed at its midpoint via a short transversal hop; the
    hops are joined inside the (convex) faces, so no other edge is crossed.
    Interior end nodes contribute their face centroid; an outer end node is
    represented by a point just outside the first/last hull gate.
    """
    verts = mesh.vertices

    def centroid(face):
        return verts[mesh.triangles[face]].mean(axis=0)

    def offset_pair(edge, prev_node, next_node):
        u, v = edge
        mid = 0.5 * (verts[u] + verts[v])
        if prev_node != OUTER:
            toward_prev = centroid(prev_node) - mid
        else:
            toward_prev = mid - centroid(next_node)
        n = toward_prev / np.hypot(*toward_prev)
        h = eps * np.hypot(*(verts[v] - verts[u]))
        return mid + h * n, mid - h * n

    pts = []
    if walk.nodes[0] != OUTER:
        pts.append(centroid(walk.nodes[0]))
    for edge, prev_node, next_node in zip(walk.edges, walk.nodes[:-1], walk.nodes[1:]):
        before, after = offset_pair(edge, prev_node, next_node)
        pts.append(before)
        pts.append(after)
    if walk.nodes[-1] != OUTER:
        pts.append(centroid(walk.nodes[-1]))
    if len(pts) < 2:
        pts = [centroid(walk.nodes[0])] * 2
    return [tuple(p) for p in pts]


def homotopic(p1, p2, mesh: TriMesh, dual: DualGraph) -> bool:
    """True when the two polylines (same endpoints) reduce to the same walk."""
    w1 = reduce_walk(path_to_walk(p1, mesh, dual))
    w2 = reduce_walk(path_to_walk(p2, mesh, dual))
    return w1 == w2
