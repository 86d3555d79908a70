"""Constrained Delaunay triangulation and barycentric transforms.

The mesh is built by incremental point insertion with flip-based
legalization inside a super-triangle, followed by constrained-edge
recovery via cavity retriangulation.  Geometric predicates use a fixed
epsilon scaled to the domain diagonal (a documented robustness
limitation; coordinates are not exact-arithmetic filtered).

The finished TriMesh is immutable and safe to share across readers.
"""

from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import GeometryError, MeshError, PointLocationError
from .geometry import Polygon

DUPLICATE_TOL_FACTOR = 1e-9   # merge tolerance, times domain diagonal
AREA_EPS_FACTOR = 1e-12       # degeneracy threshold, times diagonal^2


@dataclass(frozen=True)
class SimplexTransform:
    """Affine map between a triangle's barycentric and Cartesian frames.

    T is built from vertex differences against the third vertex:
    T = [[x1-x3, x2-x3], [y1-y3, y2-y3]], p = T @ (a1, a2) + v3.
    """

    matrix: np.ndarray
    det: float
    reference: np.ndarray  # third vertex

    def to_barycentric(self, p):
        rel = np.asarray(p, dtype=float) - self.reference
        a1 = (self.matrix[1, 1] * rel[0] - self.matrix[0, 1] * rel[1]) / self.det
        a2 = (-self.matrix[1, 0] * rel[0] + self.matrix[0, 0] * rel[1]) / self.det
        return np.array([a1, a2, 1.0 - a1 - a2])

    def from_barycentric(self, weights):
        w = np.asarray(weights, dtype=float)
        xy = self.matrix @ w[:2] + self.reference
        return xy


class TriMesh:
    """Immutable triangulation of a polygonal domain.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, CCW vertex triples
    neighbors : (nt, 3) int array; neighbors[t, i] is the triangle across
        the edge opposite local vertex i, or -1
    edge_constrained : (nt, 3) bool array, same edge indexing
    is_keep_out : (nt,) bool array
    constrained_edges : frozenset of frozenset vertex pairs
    """

    def __init__(self, vertices, triangles, neighbors, edge_constrained,
                 constrained_edges, bounds, is_keep_out=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.triangles = np.asarray(triangles, dtype=int)
        self.neighbors = np.asarray(neighbors, dtype=int)
        self.edge_constrained = np.asarray(edge_constrained, dtype=bool)
        self.constrained_edges = frozenset(constrained_edges)
        self.bounds = bounds
        n = len(self.triangles)
        if is_keep_out is None:
            is_keep_out = np.zeros(n, dtype=bool)
        self.is_keep_out = np.asarray(is_keep_out, dtype=bool)
        self.centroids = self.vertices[self.triangles].mean(axis=1)
        span = self.vertices.max(axis=0) - self.vertices.min(axis=0)
        self.diag = float(np.hypot(*span))
        self.area_eps = AREA_EPS_FACTOR * self.diag * self.diag
        self._transforms = [None] * n

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def free_simplexes(self):
        return np.flatnonzero(~self.is_keep_out)

    def triangle_points(self, t):
        return self.vertices[self.triangles[t]]

    def transform(self, t):
        if self._transforms[t] is None:
            pts = self.triangle_points(t)
            m = np.column_stack([pts[0] - pts[2], pts[1] - pts[2]])
            det = float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
            if abs(det) <= self.area_eps:
                raise MeshError(f"degenerate simplex {t}")
            self._transforms[t] = SimplexTransform(m, det, pts[2].copy())
        return self._transforms[t]

    def triangle_area(self, t):
        pts = self.triangle_points(t)
        return 0.5 * geo.orient(pts[0], pts[1], pts[2])

    def edge_vertices(self, t, i):
        """Global vertex ids of the edge opposite local vertex i."""
        tri = self.triangles[t]
        return int(tri[(i + 1) % 3]), int(tri[(i + 2) % 3])

    def is_edge_constrained(self, u, v):
        return frozenset((u, v)) in self.constrained_edges

    def locate(self, p):
        """Lowest-id triangle containing p (weights >= -1e-9)."""
        for t in range(self.n_triangles):
            w = self.transform(t).to_barycentric(p)
            if np.all(w >= -1e-9):
                return t
        raise PointLocationError(f"point {tuple(p)} is outside the mesh")

    def longest_edge(self, t):
        pts = self.triangle_points(t)
        return max(geo.dist(pts[i], pts[(i + 1) % 3]) for i in range(3))

    def segment_crosses_constraint(self, a, b):
        """True when open segment (a, b) properly crosses a constrained edge."""
        eps = geo.PREDICATE_EPS * self.diag * self.diag
        for u, v in self.constrained_edge_list():
            if geo.segments_properly_intersect(a, b, self.vertices[u],
                                               self.vertices[v], eps):
                return True
        return False

    def constrained_edge_list(self):
        if not hasattr(self, "_ce_list"):
            self._ce_list = sorted(tuple(sorted(e)) for e in self.constrained_edges)
        return self._ce_list


# ---------------------------------------------------------------------------
# incremental Delaunay builder
# ---------------------------------------------------------------------------

class _Builder:
    def __init__(self, diag):
        self.verts = []            # list of (x, y)
        self.tris = []             # list of [a, b, c] or None when removed
        self.edge_map = {}         # directed edge (u, v) -> triangle id
        self.constrained = set()   # frozenset vertex pairs
        self.orient_eps = geo.PREDICATE_EPS * diag * diag
        self.incircle_eps = geo.PREDICATE_EPS * diag ** 4
        self.last_tri = 0

    # -- low-level triangle bookkeeping ------------------------------------

    def add_vertex(self, p):
        self.verts.append((float(p[0]), float(p[1])))
        return len(self.verts) - 1

    def add_tri(self, a, b, c):
        t = len(self.tris)
        self.tris.append([a, b, c])
        for u, v in ((a, b), (b, c), (c, a)):
            self.edge_map[(u, v)] = t
        return t

    def remove_tri(self, t):
        a, b, c = self.tris[t]
        for u, v in ((a, b), (b, c), (c, a)):
            if self.edge_map.get((u, v)) == t:
                del self.edge_map[(u, v)]
        self.tris[t] = None

    def adjacent(self, u, v):
        """Triangle on the far side of directed edge u->v, or -1."""
        return self.edge_map.get((v, u), -1)

    def third_vertex(self, t, u, v):
        for w in self.tris[t]:
            if w != u and w != v:
                return w
        raise MeshError("triangle has repeated vertices")

    # -- point insertion ----------------------------------------------------

    def locate(self, p):
        """Walk to the triangle containing p; returns (tri, on_edge)."""
        t = self.last_tri
        if t >= len(self.tris) or self.tris[t] is None:
            t = next(i for i, tri in enumerate(self.tris) if tri is not None)
        seen = 0
        limit = 4 * len(self.tris) + 64
        while True:
            seen += 1
            if seen > limit:
                return self._locate_scan(p)
            a, b, c = self.tris[t]
            moved = False
            for u, v in ((a, b), (b, c), (c, a)):
                if geo.orient(self.verts[u], self.verts[v], p) < -self.orient_eps:
                    nxt = self.adjacent(u, v)
                    if nxt < 0:
                        return self._locate_scan(p)
                    t = nxt
                    moved = True
                    break
            if not moved:
                self.last_tri = t
                return t, self._on_edge(t, p)

    def _locate_scan(self, p):
        for t, tri in enumerate(self.tris):
            if tri is None:
                continue
            a, b, c = tri
            if all(geo.orient(self.verts[u], self.verts[v], p) >= -self.orient_eps
                   for u, v in ((a, b), (b, c), (c, a))):
                self.last_tri = t
                return t, self._on_edge(t, p)
        raise MeshError(f"point {p} not inside triangulation")

    def _on_edge(self, t, p):
        a, b, c = self.tris[t]
        for u, v in ((a, b), (b, c), (c, a)):
            if abs(geo.orient(self.verts[u], self.verts[v], p)) <= self.orient_eps:
                return (u, v)
        return None

    def insert_point(self, pi):
        p = self.verts[pi]
        t, edge = self.locate(p)
        if edge is None:
            a, b, c = self.tris[t]
            self.remove_tri(t)
            self.add_tri(a, b, pi)
            self.add_tri(b, c, pi)
            self.add_tri(c, a, pi)
            stack = [(a, b), (b, c), (c, a)]
        else:
            u, v = edge
            w = self.third_vertex(t, u, v)
            t2 = self.adjacent(u, v)
            self.remove_tri(t)
            self.add_tri(u, pi, w)
            self.add_tri(pi, v, w)
            stack = [(w, u), (v, w)]
            if t2 >= 0:
                z = self.third_vertex(t2, v, u)
                self.remove_tri(t2)
                self.add_tri(v, pi, z)
                self.add_tri(pi, u, z)
                stack += [(z, v), (u, z)]
            key = frozenset((u, v))
            if key in self.constrained:
                self.constrained.discard(key)
                self.constrained.add(frozenset((u, pi)))
                self.constrained.add(frozenset((pi, v)))
        while stack:
            u, v = stack.pop()
            stack.extend(self.legalize(pi, u, v))

    def legalize(self, pi, u, v):
        """Flip edge (u, v) opposite pi if it fails the in-circle test."""
        if frozenset((u, v)) in self.constrained:
            return []
        t1 = self.edge_map.get((u, v))
        if t1 is None or pi not in self.tris[t1]:
            return []
        t2 = self.adjacent(u, v)
        if t2 < 0:
            return []
        z = self.third_vertex(t2, v, u)
        pu, pv = self.verts[u], self.verts[v]
        if geo.in_circle(pu, pv, self.verts[pi], self.verts[z]) <= self.incircle_eps:
            return []
        self.remove_tri(t1)
        self.remove_tri(t2)
        self.add_tri(u, z, pi)
        self.add_tri(z, v, pi)
        return [(u, z), (z, v)]

    def legalize_all(self, max_passes=50):
        """Lawson flip sweep until every unconstrained edge is locally Delaunay."""
        for _ in range(max_passes):
            flipped = False
            for (u, v) in list(self.edge_map.keys()):
                t1 = self.edge_map.get((u, v))
                if t1 is None or frozenset((u, v)) in self.constrained:
                    continue
                t2 = self.edge_map.get((v, u))
                if t2 is None:
                    continue
                w = self.third_vertex(t1, u, v)
                z = self.third_vertex(t2, v, u)
                pu, pv, pw, pz = (self.verts[u], self.verts[v],
                                  self.verts[w], self.verts[z])
                if geo.in_circle(pu, pv, pw, pz) > self.incircle_eps:
                    # flip only if the quad (u, z, v, w) is convex
                    if (geo.orient(pw, pz, pu) < -self.orient_eps
                            and geo.orient(pw, pz, pv) > self.orient_eps):
                        self.remove_tri(t1)
                        self.remove_tri(t2)
                        self.add_tri(u, z, w)
                        self.add_tri(z, v, w)
                        flipped = True
            if not flipped:
                return

    # -- constrained edge recovery -------------------------------------------

    def insert_constraint(self, a, b):
        if a == b:
            raise GeometryError("constrained edge endpoints coincide")
        if (a, b) in self.edge_map or (b, a) in self.edge_map:
            self.constrained.add(frozenset((a, b)))
            return
        pa, pb = self.verts[a], self.verts[b]
        # check for a vertex lying on the open segment: split there
        split = self._collinear_vertex_on(a, b)
        if split is not None:
            self.insert_constraint(a, split)
            self.insert_constraint(split, b)
            return
        upper, lower, cavity = self._collect_cavity(a, b)
        for t in cavity:
            self.remove_tri(t)
        self._retriangulate(b, a, upper[::-1])
        self._retriangulate(a, b, lower[::-1])
        self.constrained.add(frozenset((a, b)))

    def _collinear_vertex_on(self, a, b):
        pa, pb = self.verts[a], self.verts[b]
        best = None
        best_t = None
        for i, p in enumerate(self.verts):
            if i == a or i == b:
                continue
            if geo.point_on_segment(p, pa, pb, self.orient_eps):
                dx = pb[0] - pa[0]
                dy = pb[1] - pa[1]
                t = ((p[0] - pa[0]) * dx + (p[1] - pa[1]) * dy) / (dx * dx + dy * dy)
                if 1e-12 < t < 1.0 - 1e-12 and (best_t is None or t < best_t):
                    best, best_t = i, t
        return best

    def _collect_cavity(self, a, b):
        """Triangles crossed by segment a->b plus cavity vertex chains."""
        pa, pb = self.verts[a], self.verts[b]
        # find the triangle incident to a whose opposite edge crosses a->b
        start = None
        for (u, v), t in self.edge_map.items():
            if u != a:
                continue
            w = self.third_vertex(t, u, v)
            # edge opposite a in triangle (a, v, w) is (v, w)
            if geo.segments_properly_intersect(pa, pb, self.verts[v],
                                               self.verts[w], self.orient_eps):
                start = (t, v, w)
                break
        if start is None:
            raise MeshError(
                f"cannot recover constrained edge ({a}, {b}): no crossing fan edge")
        t, u, v = start   # directed edge u->v crossed by a->b, u left of a->b?
        # orient so that u is on the left of a->b
        if geo.orient(pa, pb, self.verts[u]) < 0:
            u, v = v, u
        upper = [u]
        lower = [v]
        cavity = [t]
        while True:
            if frozenset((u, v)) in self.constrained:
                raise GeometryError(
                    "constrained edges cross: "
                    f"({a},{b}) intersects ({u},{v})")
            # cross to the neighbor over the undirected edge (u, v)
            t_next = self.edge_map.get((u, v))
            if t_next in cavity or t_next is None:
                t_next = self.edge_map.get((v, u))
            if t_next is None or t_next in cavity:
                raise MeshError("cavity walk failed during edge recovery")
            cavity.append(t_next)
            w = self.third_vertex(t_next, u, v)
            if w == b:
                break
            side = geo.orient(pa, pb, self.verts[w])
            if abs(side) <= self.orient_eps:
                raise MeshError("vertex on constrained segment during walk")
            if side > 0:
                upper.append(w)
                u = w
            else:
                lower.append(w)
                v = w
        return upper, lower, cavity

    def _retriangulate(self, a, b, chain):
        """Delaunay-retriangulate the pseudo-polygon a -> chain -> b.

        chain vertices lie strictly on one side of a->b, ordered along the
        cavity boundary from a to b.
        """
        if not chain:
            return
        if len(chain) == 1:
            c = chain[0]
        else:
            c = chain[0]
            for v in chain[1:]:
                # orientation-corrected in-circle: (a, b, c) may be CW here
                sign = 1.0 if geo.orient(self.verts[a], self.verts[b],
                                         self.verts[c]) > 0 else -1.0
                if sign * geo.in_circle(self.verts[a], self.verts[b],
                                        self.verts[c],
                                        self.verts[v]) > self.incircle_eps:
                    c = v
        idx = chain.index(c)
        self._retriangulate(a, c, chain[:idx])
        self._retriangulate(c, b, chain[idx + 1:])
        if geo.orient(self.verts[a], self.verts[b], self.verts[c]) > 0:
            self.add_tri(a, b, c)
        else:
            self.add_tri(a, c, b)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def _merge_points(raw, tol):
    """Deduplicate points within tol; returns (unique array, index map)."""
    unique = []
    index_map = []
    for p in raw:
        hit = None
        for j, q in enumerate(unique):
            if abs(p[0] - q[0]) <= tol and abs(p[1] - q[1]) <= tol:
                if geo.dist(p, q) <= tol:
                    hit = j
                    break
        if hit is None:
            unique.append((float(p[0]), float(p[1])))
            index_map.append(len(unique) - 1)
        else:
            index_map.append(hit)
    return unique, index_map


def triangulate_cdt(points, constrained_edges, bounds):
    """Constrained Delaunay triangulation of a polygonal domain.

    Parameters
    ----------
    points : sequence of (x, y)
        Interior/boundary vertices.  Bounds vertices are appended
        automatically and deduplicated.
    constrained_edges : sequence of (i, j)
        Index pairs into `points` whose connecting segments must appear
        in the mesh.  Bounds polygon edges are always constrained.
    bounds : Polygon
        The domain boundary; the triangulation covers it exactly.

    Raises
    ------
    GeometryError
        Duplicate constrained endpoints after merging, or crossing
        constrained edges.
    """
    if not isinstance(bounds, Polygon):
        bounds = Polygon(np.asarray(bounds, dtype=float), kind="domain_boundary")
    bverts = bounds.vertices
    span = bverts.max(axis=0) - bverts.min(axis=0)
    diag = float(np.hypot(*span))
    if diag <= 0:
        raise GeometryError("degenerate domain bounds")
    merge_tol = DUPLICATE_TOL_FACTOR * diag

    pts = [tuple(map(float, p)) for p in points]
    for p in pts:
        if not bounds.contains(p, include_boundary=True):
            raise GeometryError(f"input point {p} lies outside the bounds")
    raw = [tuple(v) for v in bverts] + pts
    unique, index_map = _merge_points(raw, merge_tol)
    n_b = len(bverts)

    def uid(point_index):
        return index_map[n_b + point_index]

    edges = set()
    for i, j in constrained_edges:
        ui, uj = uid(i), uid(j)
        if ui == uj:
            raise GeometryError(
                f"constrained edge ({i}, {j}) collapses after duplicate merge")
        edges.add((min(ui, uj), max(ui, uj)))
    for k in range(n_b):
        u, v = index_map[k], index_map[(k + 1) % n_b]
        edges.add((min(u, v), max(u, v)))
    edges = sorted(edges)

    # reject crossing constrained edges up front
    eps = geo.PREDICATE_EPS * diag * diag
    for i in range(len(edges)):
        a1, a2 = unique[edges[i][0]], unique[edges[i][1]]
        for j in range(i + 1, len(edges)):
            b1, b2 = unique[edges[j][0]], unique[edges[j][1]]
            if geo.segments_properly_intersect(a1, a2, b1, b2, eps):
                raise GeometryError(
                    f"constrained edges {edges[i]} and {edges[j]} cross")

    builder = _Builder(diag)
    lo = bverts.min(axis=0)
    hi = bverts.max(axis=0)
    center = 0.5 * (lo + hi)
    r = 50.0 * diag
    s0 = builder.add_vertex((center[0] - 2 * r, center[1] - r))
    s1 = builder.add_vertex((center[0] + 2 * r, center[1] - r))
    s2 = builder.add_vertex((center[0], center[1] + 2 * r))
    builder.add_tri(s0, s1, s2)

    vid = {}
    order = list(range(len(unique)))
    rng = np.random.default_rng(0)
    rng.shuffle(order)
    for k in order:
        vid[k] = builder.add_vertex(unique[k])
        builder.insert_point(vid[k])
    for u, v in edges:
        builder.insert_constraint(vid[u], vid[v])
    builder.legalize_all()

    return _finalize(builder, bounds, {s0, s1, s2})


def _finalize(builder, bounds, super_ids):
    keep = []
    for t, tri in enumerate(builder.tris):
        if tri is None or any(v in super_ids for v in tri):
            continue
        cen = np.mean([builder.verts[v] for v in tri], axis=0)
        if bounds.contains(cen, include_boundary=False):
            keep.append(t)

    used = sorted({v for t in keep for v in builder.tris[t]})
    vmap = {old: new for new, old in enumerate(used)}
    vertices = np.array([builder.verts[v] for v in used])
    triangles = np.array([[vmap[v] for v in builder.tris[t]] for t in keep],
                         dtype=int)
    constrained = {frozenset(vmap[v] for v in e)
                   for e in builder.constrained
                   if all(v in vmap for v in e)}

    nt = len(triangles)
    neighbors = np.full((nt, 3), -1, dtype=int)
    edge_constrained = np.zeros((nt, 3), dtype=bool)
    owner = {}
    for t in range(nt):
        a, b, c = triangles[t]
        for i, (u, v) in enumerate(((b, c), (c, a), (a, b))):
            owner[(u, v)] = (t, i)
    for (u, v), (t, i) in owner.items():
        if (v, u) in owner:
            neighbors[t, i] = owner[(v, u)][0]
        if frozenset((int(u), int(v))) in constrained:
            edge_constrained[t, i] = True

    return TriMesh(vertices, triangles, neighbors, edge_constrained,
                   constrained, bounds)


def prune_keep_out(mesh, keep_outs):
    """Flag keep-out simplexes by centroid containment.

    Every keep-out polygon edge must already be covered by constrained
    mesh edges (the CDT then guarantees no simplex straddles a keep-out
    boundary, so centroid classification is exact).
    """
    polys = [ko if isinstance(ko, Polygon) else Polygon(ko) for ko in keep_outs]
    for poly in polys:
        _check_edge_coverage(mesh, poly)
    flags = mesh.is_keep_out.copy()
    for t in range(mesh.n_triangles):
        cen = mesh.centroids[t]
        if any(p.contains(cen, include_boundary=False) for p in polys):
            flags[t] = True
    return TriMesh(mesh.vertices, mesh.triangles, mesh.neighbors,
                   mesh.edge_constrained, mesh.constrained_edges, mesh.bounds,
                   is_keep_out=flags)


def _check_edge_coverage(mesh, poly):
    """Verify each polygon edge is a union of constrained mesh edges."""
    tol = DUPLICATE_TOL_FACTOR * mesh.diag * 10
    eps = geo.PREDICATE_EPS * mesh.diag * mesh.diag
    for a, b in poly.edges():
        # collect constrained mesh edges collinear with and inside [a, b]
        cover = 0.0
        for u, v in mesh.constrained_edge_list():
            pu, pv = mesh.vertices[u], mesh.vertices[v]
            if (geo.point_on_segment(pu, a, b, eps)
                    and geo.point_on_segment(pv, a, b, eps)):
                cover += geo.dist(pu, pv)
        if abs(cover - geo.dist(a, b)) > tol:
            raise GeometryError(
                f"keep-out edge {a}-{b} is not covered by constrained mesh edges")


def locate(mesh, p):
    """Lowest-id simplex containing p; raises PointLocationError outside."""
    return mesh.locate(p)


def to_barycentric(mesh, t, p):
    """Barycentric weights of p in simplex t (weights sum to 1)."""
    return mesh.transform(t).to_barycentric(p)


def from_barycentric(mesh, t, weights):
    """Cartesian point for barycentric weights in simplex t."""
    w = np.asarray(weights, dtype=float)
    if abs(float(w.sum()) - 1.0) > 1e-6:
        raise MeshError(f"barycentric weights sum to {w.sum()}, expected 1")
    return mesh.transform(t).from_barycentric(w)
