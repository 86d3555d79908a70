import numpy as np
import pytest

from tripath import GeometryError, NoPathError, Polygon, triangulate_cdt
from tripath import geometry as geo
from tripath.corridor import (assign_target_edges, astar_corridor, cost_to_go,
                              dijkstra_corridor_cost)
from tripath.mesh import prune_keep_out
from conftest import build_random_mesh


def two_simplex_strip():
    bounds = Polygon(np.array([[0, 0], [2, 0], [2, 1], [0, 1]], float),
                     kind="domain_boundary")
    return triangulate_cdt([], [], bounds)


def test_unique_path_two_simplexes():
    mesh = two_simplex_strip()
    # pick a boundary edge of the simplex that does not contain the start
    start = mesh.centroids[0]
    other = 1
    edge = None
    for i in range(3):
        if mesh.neighbors[other, i] < 0:
            u, v = mesh.edge_vertices(other, i)
            edge = (tuple(mesh.vertices[u]), tuple(mesh.vertices[v]))
            break
    corr = astar_corridor(mesh, start, edge)
    assert corr.simplexes == [0, 1]
    assert len(corr.portals) == 1
    shared = set(map(int, mesh.triangles[0])) & set(map(int, mesh.triangles[1]))
    assert set(corr.target_edge) != shared


def test_no_path_when_fully_pruned(rng):
    mesh, polys = build_random_mesh(rng, 20, 1)
    mesh.is_keep_out[:] = True
    with pytest.raises(NoPathError):
        astar_corridor(mesh, mesh.centroids[0], ((0, 0), (1, 0)))


def _random_queries(rng, mesh, n=3):
    free = mesh.free_simplexes
    out = []
    for _ in range(n):
        s = mesh.centroids[int(rng.choice(free))]
        t = int(rng.choice(free))
        for i in range(3):
            if mesh.neighbors[t, i] < 0 and not mesh.edge_constrained[t, i]:
                u, v = mesh.edge_vertices(t, i)
                out.append((s, (tuple(mesh.vertices[u]), tuple(mesh.vertices[v]))))
                break
    return out


def test_astar_matches_dijkstra_oracle(rng):
    for _ in range(25):
        mesh, _ = build_random_mesh(rng, int(rng.integers(15, 50)),
                                    int(rng.integers(0, 4)))
        for start, edge in _random_queries(rng, mesh):
            oracle = dijkstra_corridor_cost(mesh, start, edge)
            try:
                corr = astar_corridor(mesh, start, edge, heuristic="euclidean")
            except NoPathError:
                assert oracle is None
                continue
            assert oracle is not None
            assert corr.cost == pytest.approx(oracle, abs=1e-9)


def test_detour_heuristic_never_beats_oracle(rng):
    for _ in range(5):
        mesh, _ = build_random_mesh(rng, 30, 2)
        for start, edge in _random_queries(rng, mesh, n=2):
            oracle = dijkstra_corridor_cost(mesh, start, edge)
            try:
                corr = astar_corridor(mesh, start, edge, heuristic="detour")
            except NoPathError:
                assert oracle is None
                continue
            assert corr.cost >= oracle - 1e-9


def test_corridor_portals_are_shared_edges(rng):
    mesh, _ = build_random_mesh(rng, 40, 3)
    for start, edge in _random_queries(rng, mesh, n=4):
        try:
            corr = astar_corridor(mesh, start, edge)
        except NoPathError:
            continue
        for (p, q), portal in zip(
                zip(corr.simplexes, corr.simplexes[1:]), corr.portals):
            assert set(portal) <= set(map(int, mesh.triangles[p]))
            assert set(portal) <= set(map(int, mesh.triangles[q]))
        assert not mesh.is_keep_out[corr.simplexes].any()


def test_cost_to_go_clear_line(rng):
    mesh, _ = build_random_mesh(rng, 20, 0)
    a, b = (5.0, 5.0), (60.0, 40.0)
    assert cost_to_go(mesh, a, b) == pytest.approx(geo.dist(a, b))
    assert cost_to_go(mesh, a, a) == 0.0


def test_cost_to_go_detours_around_constraint():
    bounds = Polygon(np.array([[0, 0], [10, 0], [10, 10], [0, 10]], float),
                     kind="domain_boundary")
    wall = [(5.0, 2.0), (5.0, 8.0), (5.5, 8.0), (5.5, 2.0)]
    pts = list(wall)
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    mesh = triangulate_cdt(pts, edges, bounds)
    a, b = (1.0, 5.0), (9.0, 5.0)
    # oracle: the straight segment crosses the wall
    eps = geo.PREDICATE_EPS * mesh.diag ** 2
    assert any(geo.segments_properly_intersect(a, b, mesh.vertices[u],
                                               mesh.vertices[v], eps)
               for u, v in mesh.constrained_edge_list())
    d = cost_to_go(mesh, a, b)
    assert d > geo.dist(a, b) + 0.1
    # walking around either end of the wall (both corners) is feasible
    top = (geo.dist(a, (5.0, 8.0)) + 0.5 + geo.dist((5.5, 8.0), b))
    bot = (geo.dist(a, (5.0, 2.0)) + 0.5 + geo.dist((5.5, 2.0), b))
    assert d <= max(top, bot) + 1e-6


def test_assign_target_edges_triangle():
    tri = Polygon(np.array([[0, 0], [2, 0], [1, 2]], float), kind="target")
    assigns = assign_target_edges(tri, 3)
    assert len({a.edge for a in assigns}) == 3
    headings = [a.final_heading for a in assigns]
    assert len({round(h, 6) for h in headings}) == 3
    base = next(a for a in assigns
                if set(map(tuple, a.edge)) == {(0.0, 0.0), (2.0, 0.0)})
    assert base.midpoint == (1.0, 0.0)
    assert base.final_heading == pytest.approx(np.pi / 2)


def test_assign_target_edges_mismatch():
    sq = Polygon(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float))
    with pytest.raises(GeometryError):
        assign_target_edges(sq, 3)
