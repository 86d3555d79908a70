import numpy as np
import pytest

from tripath.geometry import Polygon, polygon_signed_distance
from tripath.mesh import prune_keep_out, triangulate_cdt


def random_convex_polygon(rng, center, radius, n_sides):
    angles = np.sort(rng.uniform(0, 2 * np.pi, size=n_sides))
    # reject nearly-coincident directions to keep the polygon fat
    if np.min(np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))) < 0.3:
        return None
    r = radius * rng.uniform(0.6, 1.0, size=n_sides)
    pts = np.column_stack([center[0] + r * np.cos(angles),
                           center[1] + r * np.sin(angles)])
    return pts


def make_random_scene(rng, n_points=40, n_polys=3, width=100.0, height=80.0):
    """Random rectangular domain with non-overlapping convex keep-outs."""
    bounds = Polygon(np.array([[0, 0], [width, 0], [width, height], [0, height]],
                              float), kind="domain_boundary")
    polys = []
    attempts = 0
    while len(polys) < n_polys and attempts < 200:
        attempts += 1
        c = rng.uniform([12, 12], [width - 12, height - 12])
        radius = rng.uniform(3.0, 8.0)
        pts = random_convex_polygon(rng, c, radius, int(rng.integers(3, 6)))
        if pts is None:
            continue
        clear = all(
            min(polygon_signed_distance(v, q.vertices) for v in pts) > 2.0
            and min(polygon_signed_distance(v, pts) for v in q.vertices) > 2.0
            for q in polys)
        if clear:
            polys.append(Polygon(pts, kind="keep_out"))

    points = []
    while len(points) < n_points:
        p = rng.uniform([1, 1], [width - 1, height - 1])
        if all(q.signed_distance(p) > 0.5 for q in polys):
            points.append(tuple(p))

    edges = []
    for poly in polys:
        base = len(points)
        verts = [tuple(v) for v in poly.vertices]
        points.extend(verts)
        k = len(verts)
        edges.extend((base + i, base + (i + 1) % k) for i in range(k))
    return points, edges, bounds, polys


def build_random_mesh(rng, n_points=40, n_polys=3, **kw):
    points, edges, bounds, polys = make_random_scene(rng, n_points, n_polys, **kw)
    mesh = triangulate_cdt(points, edges, bounds)
    return prune_keep_out(mesh, polys), polys


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
