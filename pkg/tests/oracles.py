"""Independent brute-force oracles used by tests only."""

import heapq

import numpy as np

from tripath import geometry as geo
from tripath.seed import point_in_corridor


def corridor_boundary_edges(mesh, corridor):
    """Edges of corridor triangles used exactly once (the union boundary)."""
    count = {}
    for t in corridor.simplexes:
        a, b, c = map(int, mesh.triangles[t])
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            count[key] = count.get(key, 0) + 1
    return [e for e, n in count.items() if n == 1]


def _visible(mesh, corridor, boundary, a, b, eps):
    if geo.dist(a, b) < 1e-12:
        return True
    for u, v in boundary:
        if geo.segments_properly_intersect(a, b, mesh.vertices[u],
                                           mesh.vertices[v], eps):
            return False
    for f in np.linspace(0.0, 1.0, 33):
        p = (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
        if not point_in_corridor(mesh, corridor, p, tol=1e-7 * mesh.diag):
            return False
    return True


def visibility_shortest_path(mesh, corridor, start, end):
    """Dijkstra over the corridor's visibility graph; returns the length."""
    verts = sorted({int(v) for t in corridor.simplexes
                    for v in mesh.triangles[t]})
    nodes = [tuple(start), tuple(end)] + [tuple(mesh.vertices[v]) for v in verts]
    boundary = corridor_boundary_edges(mesh, corridor)
    eps = geo.PREDICATE_EPS * mesh.diag * mesh.diag
    n = len(nodes)
    adj = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if _visible(mesh, corridor, boundary, nodes[i], nodes[j], eps):
                d = geo.dist(nodes[i], nodes[j])
                adj[i].append((j, d))
                adj[j].append((i, d))
    dist = {0: 0.0}
    frontier = [(0.0, 0)]
    seen = set()
    while frontier:
        d, i = heapq.heappop(frontier)
        if i in seen:
            continue
        seen.add(i)
        if i == 1:
            return d
        for j, w in adj[i]:
            cand = d + w
            if cand < dist.get(j, np.inf):
                dist[j] = cand
                heapq.heappush(frontier, (cand, j))
    return None
