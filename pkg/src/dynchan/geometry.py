"""Planar primitives: Delaunay triangulation, face-adjacency dual graph, point location.

Vertices are pedestrian positions (plus virtual corner points added by the
planner).  All coordinates are meters.  Meshes are immutable once built.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay, ConvexHull

EPS_GEO = 1e-9   # squared-length tolerance for orientation / in-circle tests
EPS_DUP = 1e-6   # two points closer than this are duplicates

#: Sentinel face id for the unbounded outer face.
OUTER = -1


class GeometryError(ValueError):
    pass


class FewerThanThreePoints(GeometryError):
    pass


class AllCollinear(GeometryError):
    pass


class DuplicatePoints(GeometryError):
    pass


class DegenerateTriangle(GeometryError):
    pass


def orient(a, b, c):
    """Twice the signed area of triangle abc (positive if counterclockwise)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def circumcircle(a, b, c):
    """Circumcenter and circumradius of the triangle abc.

    Raises DegenerateTriangle when the points are (near-)collinear.
    """
    area2 = orient(a, b, c)
    if abs(area2) <= EPS_GEO:
        raise DegenerateTriangle(f"collinear points {a}, {b}, {c}")
    ax, ay = a[0], a[1]
    bx, by = b[0] - ax, b[1] - ay
    cx, cy = c[0] - ax, c[1] - ay
    d = 2.0 * (bx * cy - by * cx)
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (cy * b2 - by * c2) / d
    uy = (bx * c2 - cx * b2) / d
    center = np.array([ax + ux, ay + uy])
    radius = float(np.hypot(ux, uy))
    return center, radius


@dataclass(frozen=True)
class TriMesh:
    """Triangulation of a planar point set.

    triangles are counterclockwise vertex-index triples.  ``edges`` maps each
    undirected edge (sorted vertex pair) to the tuple of incident triangle
    ids; hull edges have one.  ``hull`` lists the convex-hull vertex indices
    in counterclockwise order.
    """

    vertices: np.ndarray          # (n, 2) float
    triangles: np.ndarray         # (m, 3) int, CCW
    edges: dict = field(repr=False)       # (i, j) sorted -> tuple of face ids
    hull: np.ndarray              # hull vertex indices, CCW

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    def is_hull_edge(self, edge):
        return len(self.edges[edge]) == 1

    def triangle_points(self, face):
        return self.vertices[self.triangles[face]]


def triangulate(points) -> TriMesh:
    """Delaunay-triangulate a point set.

    Deterministic for identical input order.  Raises FewerThanThreePoints,
    AllCollinear or DuplicatePoints for inputs that admit no triangulation.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError("expected an (n, 2) array of points")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("non-finite coordinates")
    n = len(pts)
    if n < 3:
        raise FewerThanThreePoints(f"{n} points cannot be triangulated")
    # Duplicate rejection keeps vertex ids in one-to-one correspondence
    # with the input pedestrians.
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    gaps = np.diff(pts[order], axis=0)
    if len(gaps) and np.min(np.hypot(gaps[:, 0], gaps[:, 1])) <= EPS_DUP:
        raise DuplicatePoints("points closer than EPS_DUP")
    if _all_collinear(pts):
        raise AllCollinear("all points collinear")

    tri = Delaunay(pts)
    simplices = tri.simplices.copy()
    # enforce CCW orientation
    for k, (i, j, l) in enumerate(simplices):
        if orient(pts[i], pts[j], pts[l]) < 0:
            simplices[k] = (i, l, j)

    edges: dict = {}
    for f, (i, j, l) in enumerate(simplices):
        for u, v in ((i, j), (j, l), (l, i)):
            key = (u, v) if u < v else (v, u)
            edges.setdefault(key, []).append(f)
    edges = {k: tuple(v) for k, v in edges.items()}

    hull = ConvexHull(pts).vertices  # CCW order
    return TriMesh(vertices=pts, triangles=simplices, edges=edges, hull=hull)


def _all_collinear(pts):
    a = pts[0]
    for b in pts[1:]:
        if np.hypot(*(b - a)) > EPS_DUP:
            d = b - a
            cross = (pts[:, 0] - a[0]) * d[1] - (pts[:, 1] - a[1]) * d[0]
            return bool(np.all(np.abs(cross) <= EPS_GEO * max(1.0, np.max(np.abs(pts)))))
    return True  # all points coincident (caught earlier as duplicates)


@dataclass(frozen=True)
class DualGraph:
    """Face-adjacency dual of a TriMesh with one extra node for the outer face.

    ``adjacency[node]`` lists (neighbor, gate) pairs where gate is the crossed
    triangulation edge.  A triangle with two hull edges has two parallel edges
    to OUTER, one per hull edge.
    """

    adjacency: dict = field(repr=False)   # node -> list of (node, gate)
    n_nodes: int = 0
    n_edges: int = 0

    def neighbors(self, node):
        return self.adjacency[node]

    def gate_between(self, a, b):
        """The crossed triangulation edge for the dual edge a-b (first match)."""
        for nbr, gate in self.adjacency[a]:
            if nbr == b:
                return gate
        raise KeyError(f"no dual edge between {a} and {b}")


def dual_graph(mesh: TriMesh) -> DualGraph:
    adjacency = {OUTER: []}
    for f in range(mesh.n_triangles):
        adjacency[f] = []
    for gate, faces in mesh.edges.items():
        if len(faces) == 2:
            a, b = faces
            adjacency[a].append((b, gate))
            adjacency[b].append((a, gate))
        else:
            (a,) = faces
            adjacency[a].append((OUTER, gate))
            adjacency[OUTER].append((a, gate))
    for node in adjacency:
        adjacency[node].sort(key=lambda ng: (ng[0], ng[1]))
    return DualGraph(adjacency=adjacency,
                     n_nodes=mesh.n_triangles + 1,
                     n_edges=mesh.n_edges)


def locate_point(mesh: TriMesh, p):
    """Triangle containing p (boundary inclusive, lowest face id wins), else OUTER."""
    px, py = float(p[0]), float(p[1])
    verts = mesh.vertices
    tris = mesh.triangles
    a = verts[tris[:, 0]]
    b = verts[tris[:, 1]]
    c = verts[tris[:, 2]]
    # CCW triangles: inside iff all three edge cross products >= -eps
    d0 = (b[:, 0] - a[:, 0]) * (py - a[:, 1]) - (b[:, 1] - a[:, 1]) * (px - a[:, 0])
    d1 = (c[:, 0] - b[:, 0]) * (py - b[:, 1]) - (c[:, 1] - b[:, 1]) * (px - b[:, 0])
    d2 = (a[:, 0] - c[:, 0]) * (py - c[:, 1]) - (a[:, 1] - c[:, 1]) * (px - c[:, 0])
    inside = (d0 >= -EPS_GEO) & (d1 >= -EPS_GEO) & (d2 >= -EPS_GEO)
    hits = np.nonzero(inside)[0]
    if len(hits) == 0:
        return OUTER
    return int(hits[0])


def segment_point_distance(a, b, p):
    """Distance from point p to segment ab."""
    ax, ay = a[0], a[1]
    vx, vy = b[0] - ax, b[1] - ay
    wx, wy = p[0] - ax, p[1] - ay
    vv = vx * vx + vy * vy
    t = 0.0 if vv == 0.0 else max(0.0, min(1.0, (wx * vx + wy * vy) / vv))
    dx, dy = wx - t * vx, wy - t * vy
    return (dx * dx + dy * dy) ** 0.5


def segments_properly_cross(p1, p2, q1, q2, eps=EPS_GEO):
    """True when the open segments p1p2 and q1q2 cross at an interior point."""
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and \
           ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps))
