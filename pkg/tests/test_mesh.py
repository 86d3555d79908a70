import numpy as np
import pytest

from tripath import (GeometryError, MeshError, PointLocationError, Polygon,
                     from_barycentric, locate, prune_keep_out, to_barycentric,
                     triangulate_cdt)
from tripath import geometry as geo
from conftest import build_random_mesh, make_random_scene

UNIT_SQUARE = Polygon(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float),
                      kind="domain_boundary")


def mesh_checks(mesh, rel_area_tol=1e-6):
    """The TriMesh invariant battery shared across randomized tests."""
    # adjacency symmetry
    for t in range(mesh.n_triangles):
        for i in range(3):
            n = mesh.neighbors[t, i]
            if n >= 0:
                assert t in mesh.neighbors[n], (t, n)
    # area conservation
    total = sum(mesh.triangle_area(t) for t in range(mesh.n_triangles))
    assert abs(total - mesh.bounds.area) <= rel_area_tol * mesh.bounds.area
    # local Delaunay on unconstrained interior edges
    eps = geo.PREDICATE_EPS * mesh.diag ** 4 * 10
    for t in range(mesh.n_triangles):
        a, b, c = mesh.vertices[mesh.triangles[t]]
        for i in range(3):
            n = mesh.neighbors[t, i]
            if n < 0 or mesh.edge_constrained[t, i]:
                continue
            opp = set(mesh.triangles[n]) - set(mesh.triangles[t])
            assert len(opp) == 1
            d = mesh.vertices[opp.pop()]
            assert geo.in_circle(a, b, c, d) <= eps


def test_unit_square_two_triangles():
    mesh = triangulate_cdt([], [], UNIT_SQUARE)
    assert mesh.n_triangles == 2
    total = sum(mesh.triangle_area(t) for t in range(2))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_constrained_diagonal_recovered():
    mesh = triangulate_cdt([(0, 0), (1, 1)], [(0, 1)], UNIT_SQUARE)
    ids = {tuple(v): i for i, v in enumerate(map(tuple, mesh.vertices))}
    assert mesh.is_edge_constrained(ids[(0.0, 0.0)], ids[(1.0, 1.0)])


def test_blocked_visibility_configuration():
    # a constrained band separates (4, 4) from (1.5, 6): no mesh edge may
    # join them even though the in-circle test alone would allow it
    bounds = Polygon(np.array([[0, 0], [8, 0], [8, 8], [0, 8]], float),
                     kind="domain_boundary")
    pts = [(4.0, 4.0), (1.5, 6.0), (1.0, 5.0), (6.0, 5.4), (6.5, 6.2), (1.2, 5.9)]
    # constrained quad strip between the two points
    edges = [(2, 3), (3, 4), (4, 5), (5, 2)]
    mesh = triangulate_cdt(pts, edges, bounds)
    ids = {tuple(np.round(v, 9)): i for i, v in enumerate(map(tuple, mesh.vertices))}
    a = ids[(4.0, 4.0)]
    b = ids[(1.5, 6.0)]
    joined = any(
        {a, b} <= {int(u) for u in tri} and
        any({a, b} == set(mesh.edge_vertices(t, i)) for i in range(3))
        for t, tri in enumerate(mesh.triangles))
    assert not joined


def test_duplicate_points_merged():
    mesh = triangulate_cdt([(0.5, 0.5), (0.5, 0.5 + 1e-12)], [], UNIT_SQUARE)
    assert len(mesh.vertices) == 5


def test_crossing_constraints_rejected():
    pts = [(0.1, 0.1), (0.9, 0.9), (0.1, 0.9), (0.9, 0.1)]
    with pytest.raises(GeometryError):
        triangulate_cdt(pts, [(0, 1), (2, 3)], UNIT_SQUARE)


def test_point_outside_bounds_rejected():
    with pytest.raises(GeometryError):
        triangulate_cdt([(2.0, 2.0)], [], UNIT_SQUARE)


def test_randomized_mesh_invariants(rng):
    for _ in range(20):
        n_pts = int(rng.integers(10, 60))
        n_polys = int(rng.integers(0, 5))
        mesh, _ = build_random_mesh(rng, n_pts, n_polys)
        mesh_checks(mesh)


def test_prune_no_keep_outs_is_identity():
    mesh = triangulate_cdt([], [], UNIT_SQUARE)
    pruned = prune_keep_out(mesh, [])
    assert len(pruned.free_simplexes) == pruned.n_triangles


def test_prune_matches_point_in_polygon_oracle(rng):
    mesh, polys = build_random_mesh(rng, 40, 3)
    for t in range(mesh.n_triangles):
        cen = mesh.centroids[t]
        inside = any(geo.point_in_polygon(cen, p.vertices, include_boundary=False)
                     for p in polys)
        assert bool(mesh.is_keep_out[t]) == inside


def test_prune_requires_registered_edges():
    mesh = triangulate_cdt([], [], UNIT_SQUARE)
    rogue = Polygon(np.array([[0.2, 0.2], [0.4, 0.2], [0.3, 0.4]]))
    with pytest.raises(GeometryError):
        prune_keep_out(mesh, [rogue])


def test_keep_out_covering_domain_empties_free_set():
    big = Polygon(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float))
    pts = [tuple(v) for v in big.vertices]
    edges = [(i, (i + 1) % 4) for i in range(4)]
    mesh = triangulate_cdt(pts, edges, UNIT_SQUARE)
    pruned = prune_keep_out(mesh, [big])
    assert len(pruned.free_simplexes) == 0


def test_locate_centroids_and_outside(rng):
    mesh, _ = build_random_mesh(rng, 30, 2)
    for t in range(0, mesh.n_triangles, 5):
        assert locate(mesh, mesh.centroids[t]) == t
    with pytest.raises(PointLocationError):
        locate(mesh, (-50.0, -50.0))


def test_locate_against_bruteforce_oracle(rng):
    mesh, _ = build_random_mesh(rng, 30, 2)
    pts = rng.uniform([1, 1], [99, 79], size=(1000, 2))
    for p in pts:
        t = locate(mesh, p)
        w = to_barycentric(mesh, t, p)
        assert np.all(w >= -1e-9)
        # oracle: first triangle (ascending id) containing p by orientation
        hit = None
        for s in range(mesh.n_triangles):
            a, b, c = mesh.vertices[mesh.triangles[s]]
            if (geo.orient(a, b, p) >= -1e-9 * mesh.diag
                    and geo.orient(b, c, p) >= -1e-9 * mesh.diag
                    and geo.orient(c, a, p) >= -1e-9 * mesh.diag):
                hit = s
                break
        assert hit is not None
        # both must contain p; ids may differ only on shared boundaries
        wh = to_barycentric(mesh, hit, p)
        assert np.all(wh >= -1e-7)


def test_barycentric_vertices_and_centroid(rng):
    mesh, _ = build_random_mesh(rng, 20, 1)
    t = int(mesh.free_simplexes[0])
    pts = mesh.triangle_points(t)
    np.testing.assert_allclose(to_barycentric(mesh, t, pts[0]), [1, 0, 0],
                               atol=1e-9)
    cen = pts.mean(axis=0)
    np.testing.assert_allclose(to_barycentric(mesh, t, cen), [1 / 3] * 3,
                               atol=1e-9)
    np.testing.assert_allclose(from_barycentric(mesh, t, [1, 0, 0]), pts[0],
                               atol=1e-12)


def test_barycentric_round_trip(rng):
    mesh, _ = build_random_mesh(rng, 30, 2)
    for _ in range(200):
        t = int(rng.integers(0, mesh.n_triangles))
        w = rng.dirichlet([1, 1, 1])
        p = from_barycentric(mesh, t, w)
        p2 = from_barycentric(mesh, t, to_barycentric(mesh, t, p))
        assert geo.dist(p, p2) < 1e-9


def test_bad_weight_sum_rejected(rng):
    mesh, _ = build_random_mesh(rng, 10, 0)
    with pytest.raises(MeshError):
        from_barycentric(mesh, 0, [0.5, 0.5, 0.5])


def test_constrained_edge_coverage(rng):
    # every keep-out polygon edge is covered by constrained mesh edges
    points, edges, bounds, polys = make_random_scene(rng, 30, 3)
    mesh = triangulate_cdt(points, edges, bounds)
    prune_keep_out(mesh, polys)  # raises if coverage fails
