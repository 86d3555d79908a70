"""Planar geometric primitives and predicates.

All predicates take a scale-dependent epsilon derived from the working
domain's diagonal; callers that know their domain should pass it through.
Coordinates are plain float pairs or (n, 2) numpy arrays in feet.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError

# Default predicate tolerance on unit-scale coordinates.  Orientation
# determinants scale as length^2 and in-circle determinants as length^4,
# so the effective epsilons are eps * diag^2 and eps * diag^4.
PREDICATE_EPS = 1e-12


def orient(a, b, c):
    """Twice the signed area of triangle (a, b, c); > 0 for CCW order."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def orient_sign(a, b, c, eps):
    d = orient(a, b, c)
    if d > eps:
        return 1
    if d < -eps:
        return -1
    return 0


def in_circle(a, b, c, d):
    """In-circumcircle determinant for CCW triangle (a, b, c).

    Positive when d lies strictly inside the circumcircle.
    """
    adx = a[0] - d[0]
    ady = a[1] - d[1]
    bdx = b[0] - d[0]
    bdy = b[1] - d[1]
    cdx = c[0] - d[0]
    cdy = c[1] - d[1]
    ad2 = adx * adx + ady * ady
    bd2 = bdx * bdx + bdy * bdy
    cd2 = cdx * cdx + cdy * cdy
    return (adx * (bdy * cd2 - cdy * bd2)
            - ady * (bdx * cd2 - cdx * bd2)
            + ad2 * (bdx * cdy - cdx * bdy))


def dist(a, b):
    return float(np.hypot(b[0] - a[0], b[1] - a[1]))


def segments_properly_intersect(p1, p2, q1, q2, eps):
    """True when the open interiors of the two segments cross."""
    d1 = orient_sign(q1, q2, p1, eps)
    d2 = orient_sign(q1, q2, p2, eps)
    d3 = orient_sign(p1, p2, q1, eps)
    d4 = orient_sign(p1, p2, q2, eps)
    return d1 * d2 < 0 and d3 * d4 < 0


def point_on_segment(p, a, b, eps):
    """True when p lies on segment [a, b] (inclusive) within tolerance."""
    if orient_sign(a, b, p, eps) != 0:
        return False
    lo_x, hi_x = min(a[0], b[0]), max(a[0], b[0])
    lo_y, hi_y = min(a[1], b[1]), max(a[1], b[1])
    slack = np.sqrt(max(eps, 0.0)) + 1e-15
    return (lo_x - slack <= p[0] <= hi_x + slack
            and lo_y - slack <= p[1] <= hi_y + slack)


def segment_intersection_point(p1, p2, q1, q2):
    """Intersection point of the supporting lines, or None if parallel."""
    r = (p2[0] - p1[0], p2[1] - p1[1])
    s = (q2[0] - q1[0], q2[1] - q1[1])
    denom = r[0] * s[1] - r[1] * s[0]
    if denom == 0.0:
        return None
    t = ((q1[0] - p1[0]) * s[1] - (q1[1] - p1[1]) * s[0]) / denom
    return (p1[0] + t * r[0], p1[1] + t * r[1])


def point_segment_distance(p, a, b):
    ab = (b[0] - a[0], b[1] - a[1])
    ap = (p[0] - a[0], p[1] - a[1])
    denom = ab[0] * ab[0] + ab[1] * ab[1]
    if denom == 0.0:
        return dist(p, a)
    t = (ap[0] * ab[0] + ap[1] * ab[1]) / denom
    t = min(1.0, max(0.0, t))
    proj = (a[0] + t * ab[0], a[1] + t * ab[1])
    return dist(p, proj)


def polygon_signed_area(vertices):
    """Shoelace signed area; positive for CCW vertex order."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def point_in_polygon(p, vertices, include_boundary=True, eps=0.0):
    """Crossing-number containment test for a simple polygon."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    if include_boundary or eps > 0.0:
        for i in range(n):
            if point_on_segment(p, v[i], v[(i + 1) % n], max(eps, 1e-18)):
                return include_boundary
    inside = False
    x, y = p[0], p[1]
    j = n - 1
    for i in range(n):
        xi, yi = v[i]
        xj, yj = v[j]
        if (yi > y) != (yj > y):
            x_cross = xi + (y - yi) * (xj - xi) / (yj - yi)
            if x < x_cross:
                inside = not inside
        j = i
    return inside


def polygon_signed_distance(p, vertices):
    """Distance to the polygon boundary, negative when p is inside."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    d = min(point_segment_distance(p, v[i], v[(i + 1) % n]) for i in range(n))
    if point_in_polygon(p, v, include_boundary=True):
        return -d
    return d


def is_simple_polygon(vertices, eps):
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    for i in range(n):
        a1, a2 = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = v[j], v[(j + 1) % n]
            if segments_properly_intersect(a1, a2, b1, b2, eps):
                return False
    return True


@dataclass
class Polygon:
    """A simple polygon, normalized to counter-clockwise vertex order."""

    vertices: np.ndarray
    kind: str = "keep_out"  # keep_out | target | domain_boundary

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("polygon needs >= 3 planar vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("polygon has non-finite coordinates")
        area = polygon_signed_area(v)
        if area == 0.0:
            raise GeometryError("polygon is degenerate (zero area)")
        if area < 0.0:
            v = v[::-1].copy()
        diag = float(np.hypot(*(v.max(axis=0) - v.min(axis=0))))
        if not is_simple_polygon(v, PREDICATE_EPS * diag * diag):
            raise GeometryError("polygon is self-intersecting")
        self.vertices = v

    @property
    def area(self):
        return polygon_signed_area(self.vertices)

    def edges(self):
        v = self.vertices
        return [(tuple(v[i]), tuple(v[(i + 1) % len(v)])) for i in range(len(v))]

    def contains(self, p, include_boundary=True):
        return point_in_polygon(p, self.vertices, include_boundary)

    def signed_distance(self, p):
        return polygon_signed_distance(p, self.vertices)


def edge_midpoint(a, b):
    return (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))


def inward_normal_heading(a, b, polygon):
    """Heading (rad) of the inward normal of directed polygon edge a->b.

    The normal is validated by stepping a short distance into the polygon.
    """
    dx, dy = b[0] - a[0], b[1] - a[1]
    length = float(np.hypot(dx, dy))
    if length == 0.0:
        raise GeometryError("degenerate polygon edge")
    mid = edge_midpoint(a, b)
    step = 1e-3 * length
    for nx, ny in ((-dy / length, dx / length), (dy / length, -dx / length)):
        probe = (mid[0] + step * nx, mid[1] + step * ny)
        if point_in_polygon(probe, polygon.vertices, include_boundary=False):
            return float(np.arctan2(ny, nx))
    raise GeometryError("no inward normal found for polygon edge")
