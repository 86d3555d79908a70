"""A* search over the free-simplex adjacency graph.

Each aircraft receives one Connected Simplex Corridor (CSC): an ordered
chain of adjacent, obstacle-free triangles from its start simplex to its
assigned target-polygon edge.  Transition cost is the distance between
simplex centroids; a virtual goal node sits at the target-edge midpoint.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import GeometryError, NoPathError
from .geometry import Polygon


@dataclass(frozen=True)
class TargetAssignment:
    """One aircraft's terminal edge on the target polygon."""

    aircraft: int
    edge: tuple          # (vertex a, vertex b) coordinates, CCW order
    midpoint: tuple
    final_heading: float  # rad, inward normal of the edge


@dataclass
class Corridor:
    """Ordered free-simplex chain ending at a target edge."""

    aircraft: int
    simplexes: list                  # simplex ids, start -> target
    portals: list                    # (vertex id, vertex id) between phases
    target_edge: tuple               # (vertex id, vertex id) on target polygon
    cost: float = 0.0

    @property
    def n_phases(self):
        return len(self.simplexes)


def assign_target_edges(target, n_aircraft):
    """Bijective aircraft -> target-edge assignment.

    The target polygon must have exactly one side per aircraft; each
    assignment carries the edge midpoint and the inward-normal heading.
    """
    if not isinstance(target, Polygon):
        target = Polygon(np.asarray(target, float), kind="target")
    sides = target.edges()
    if len(sides) != n_aircraft:
        raise GeometryError(
            f"target polygon has {len(sides)} sides for {n_aircraft} aircraft")
    out = []
    for i, (a, b) in enumerate(sides):
        out.append(TargetAssignment(
            aircraft=i,
            edge=(a, b),
            midpoint=geo.edge_midpoint(a, b),
            final_heading=geo.inward_normal_heading(a, b, target)))
    return out


def cost_to_go(mesh, start, goal, _depth=None, _visited=None):
    """Heuristic distance from start to goal around constrained edges.

    Euclidean when the straight segment crosses no constrained edge;
    otherwise the nearest blocking constrained edge is walked around via
    its endpoints, recursively, depth-limited by the constrained edge
    count.  Not guaranteed admissible (see astar_corridor's heuristic
    options).
    """
    if _depth is None:
        _depth = len(mesh.constrained_edge_list()) + 2
    if _visited is None:
        _visited = frozenset()
    direct = geo.dist(start, goal)
    if direct == 0.0:
        return 0.0
    if _depth <= 0:
        return direct
    eps = geo.PREDICATE_EPS * mesh.diag * mesh.diag
    best_edge = None
    best_t = np.inf
    for u, v in mesh.constrained_edge_list():
        if (u, v) in _visited:
            continue
        pu, pv = mesh.vertices[u], mesh.vertices[v]
        if geo.segments_properly_intersect(start, goal, pu, pv, eps):
            hit = geo.segment_intersection_point(start, goal, pu, pv)
            if hit is None:
                continue
            t = geo.dist(start, hit)
            if t < best_t:
                best_t = t
                best_edge = (u, v)
    if best_edge is None:
        return direct
    u, v = best_edge
    visited = _visited | {(u, v)}
    options = []
    for w in (u, v):
        pw = tuple(mesh.vertices[w])
        options.append(geo.dist(start, pw)
                       + cost_to_go(mesh, pw, goal, _depth - 1, visited))
    return min(options)


def _goal_simplexes(mesh, target_edge_coords):
    """Free simplexes owning the target edge, with the edge's vertex ids."""
    a, b = target_edge_coords
    hits = []
    for t in mesh.free_simplexes:
        for i in range(3):
            u, v = mesh.edge_vertices(t, i)
            pu, pv = mesh.vertices[u], mesh.vertices[v]
            same = ((geo.dist(pu, a) < 1e-9 and geo.dist(pv, b) < 1e-9)
                    or (geo.dist(pu, b) < 1e-9 and geo.dist(pv, a) < 1e-9))
            if same:
                hits.append((int(t), (u, v)))
    return hits


def astar_corridor(mesh, start, target_edge, aircraft=0, heuristic="euclidean",
                   penalized=None, penalty=0.0):
    """A* over free simplexes from the start point to a target edge.

    Parameters
    ----------
    target_edge : pair of (x, y)
        Coordinates of the assigned target-polygon edge.
    heuristic : {"euclidean", "detour"}
        "euclidean" is admissible (corridor cost then equals the
        Dijkstra optimum); "detour" uses cost_to_go, which may
        overestimate around constraints but steers the search harder.
    penalized : set of simplex ids, optional
        Simplexes already claimed by other aircraft; entering one adds
        `penalty` (used to spread corridors between aircraft).
    """
    try:
        start_simplex = mesh.locate(start)
    except Exception as exc:
        raise NoPathError(f"aircraft {aircraft}: start {start} is outside "
                          f"the mesh", aircraft) from exc
    if mesh.is_keep_out[start_simplex]:
        raise NoPathError(f"aircraft {aircraft}: start lies in a keep-out "
                          "simplex", aircraft)
    goals = _goal_simplexes(mesh, target_edge)
    if not goals:
        raise NoPathError(f"aircraft {aircraft}: target edge borders no free "
                          "simplex", aircraft)
    goal_ids = {t: edge for t, edge in goals}
    goal_mid = geo.edge_midpoint(*target_edge)
    penalized = penalized or set()

    def h(t):
        c = mesh.centroids[t]
        if heuristic == "detour":
            return cost_to_go(mesh, c, goal_mid)
        return geo.dist(c, goal_mid)

    GOAL = -1
    dist_so_far = {start_simplex: 0.0}
    parents = {start_simplex: None}
    frontier = [(h(start_simplex), start_simplex, start_simplex)]
    closed = set()
    goal_parent = None
    while frontier:
        f, tie, t = heapq.heappop(frontier)
        if t == GOAL:
            goal_parent = parents[GOAL]
            break
        if t in closed:
            continue
        closed.add(t)
        g = dist_so_far[t]
        succ = []
        for i in range(3):
            n = int(mesh.neighbors[t, i])
            if n >= 0 and not mesh.is_keep_out[n] and not mesh.edge_constrained[t, i]:
                step = geo.dist(mesh.centroids[t], mesh.centroids[n])
                if n in penalized:
                    step += penalty
                succ.append((n, step))
        if t in goal_ids:
            succ.append((GOAL, geo.dist(mesh.centroids[t], goal_mid)))
        for n, step in succ:
            cand = g + step
            if cand < dist_so_far.get(n, np.inf) - 1e-12:
                dist_so_far[n] = cand
                parents[n] = t
                hn = 0.0 if n == GOAL else h(n)
                heapq.heappush(frontier, (cand + hn, n, n))
    if goal_parent is None:
        raise NoPathError(f"aircraft {aircraft}: no free corridor to the "
                          "target edge", aircraft)

    chain = []
    t = goal_parent
    while t is not None:
        chain.append(t)
        t = parents[t]
    chain.reverse()
    portals = []
    for p, q in zip(chain, chain[1:]):
        shared = sorted(set(map(int, mesh.triangles[p]))
                        & set(map(int, mesh.triangles[q])))
        if len(shared) != 2:
            raise NoPathError("corridor chain is not edge-adjacent", aircraft)
        portals.append(tuple(shared))
    return Corridor(aircraft=aircraft, simplexes=chain, portals=portals,
                    target_edge=goal_ids[goal_parent],
                    cost=dist_so_far[GOAL])


def dijkstra_corridor_cost(mesh, start, target_edge, penalized=None,
                           penalty=0.0):
    """Exhaustive-search oracle for the optimal corridor cost."""
    start_simplex = mesh.locate(start)
    goals = _goal_simplexes(mesh, target_edge)
    if mesh.is_keep_out[start_simplex] or not goals:
        return None
    goal_ids = {t for t, _ in goals}
    goal_mid = geo.edge_midpoint(*target_edge)
    penalized = penalized or set()
    dist_so_far = {start_simplex: 0.0}
    frontier = [(0.0, start_simplex)]
    best = None
    done = set()
    while frontier:
        g, t = heapq.heappop(frontier)
        if t in done:
            continue
        done.add(t)
        if t in goal_ids:
            total = g + geo.dist(mesh.centroids[t], goal_mid)
            if best is None or total < best:
                best = total
        for i in range(3):
            n = int(mesh.neighbors[t, i])
            if n >= 0 and not mesh.is_keep_out[n] and not mesh.edge_constrained[t, i]:
                step = geo.dist(mesh.centroids[t], mesh.centroids[n])
                if n in penalized:
                    step += penalty
                cand = g + step
                if cand < dist_so_far.get(n, np.inf):
                    dist_so_far[n] = cand
                    heapq.heappush(frontier, (cand, n))
    return best
