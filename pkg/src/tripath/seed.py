"""Funnel shortest paths, apex inflation with turn-radius arcs, and
flight-time budgeting.

The funnel (string-pulling) pass yields the Euclidean shortest polyline
through a simplex corridor.  Interior apexes whose corner-cut chord
would cross a constrained edge are inflated into circular arcs of the
vehicle's minimum turning radius; gentle apexes keep the straight
polyline, which stays a valid (slightly conservative) seed.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import BudgetError, GeometryError, InfeasibleSeedError


@dataclass
class ApexPolyline:
    """Shortest polyline through a corridor, start and end included."""

    points: list

    @property
    def length(self):
        return sum(geo.dist(a, b) for a, b in zip(self.points, self.points[1:]))


@dataclass
class SeedSegment:
    kind: str            # "line" | "arc"
    p0: tuple
    p1: tuple
    length: float
    center: tuple = None
    radius: float = 0.0
    angle0: float = 0.0  # center-to-point angle at p0
    sweep: float = 0.0   # signed sweep, + is CCW

    def point_at(self, s):
        """Point and unwrapped-tangent heading at arc length s in [0, length]."""
        if self.kind == "line":
            f = 0.0 if self.length == 0 else s / self.length
            x = self.p0[0] + f * (self.p1[0] - self.p0[0])
            y = self.p0[1] + f * (self.p1[1] - self.p0[1])
            heading = math.atan2(self.p1[1] - self.p0[1],
                                 self.p1[0] - self.p0[0])
            return (x, y), heading
        frac = 0.0 if self.length == 0 else s / self.length
        ang = self.angle0 + frac * self.sweep
        x = self.center[0] + self.radius * math.cos(ang)
        y = self.center[1] + self.radius * math.sin(ang)
        heading = ang + (math.pi / 2 if self.sweep >= 0 else -math.pi / 2)
        return (x, y), heading


@dataclass
class DubinsSeed:
    """Straight/arc seed path with its geometric flight time."""

    segments: list
    radius: float

    @property
    def length(self):
        return sum(s.length for s in self.segments)

    def flight_time(self, v_max):
        """Geometric flight time when flown at constant v_max."""
        return self.length / v_max


@dataclass
class TimingBudget:
    """Per-aircraft geometric flight times and orbit allocations."""

    flight_times: list       # ft_n per aircraft, scenario order
    order: list              # aircraft indices, descending flight time
    time_differences: list   # td_n = ft_lead - ft_n per aircraft
    orbit_counts: list       # N_n per aircraft (0 for the leader)
    ct_min: float
    ct_max: float


def turning_radius(v, theta_dot):
    """Minimum turning radius R = v / theta_dot."""
    if theta_dot <= 0.0:
        raise GeometryError("turn rate must be positive")
    return v / theta_dot


# ---------------------------------------------------------------------------
# funnel algorithm
# ---------------------------------------------------------------------------

def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _oriented_portals(mesh, corridor):
    """Corridor portals as (left, right) coordinate pairs along travel."""
    portals = []
    for k, (u, v) in enumerate(corridor.portals):
        c_from = mesh.centroids[corridor.simplexes[k]]
        c_to = mesh.centroids[corridor.simplexes[k + 1]]
        d = (c_to[0] - c_from[0], c_to[1] - c_from[1])
        pu = tuple(mesh.vertices[u])
        pv = tuple(mesh.vertices[v])
        mid = geo.edge_midpoint(pu, pv)
        side = d[0] * (pu[1] - mid[1]) - d[1] * (pu[0] - mid[0])
        if side >= 0:
            portals.append((pu, pv))
        else:
            portals.append((pv, pu))
    return portals


def funnel_path(mesh, corridor, start, end):
    """Euclidean shortest path through the corridor from start to end."""
    if corridor.n_phases < 1:
        raise GeometryError("empty corridor")
    start = (float(start[0]), float(start[1]))
    end = (float(end[0]), float(end[1]))
    portals = _oriented_portals(mesh, corridor)
    portals = [(start, start)] + portals + [(end, end)]

    pts = [start]
    apex = portals[0][0]
    p_left = portals[0][0]
    p_right = portals[0][1]
    apex_i = left_i = right_i = 0
    i = 1
    while i < len(portals):
        left, right = portals[i]
        # tighten the right side: candidate must not swing rightward
        if _cross(apex, p_right, right) >= 0.0:
            if apex == p_right or _cross(apex, p_left, right) < 0.0:
                p_right = right
                right_i = i
            else:
                # right crossed over left: left becomes the new apex
                if p_left != pts[-1]:
                    pts.append(p_left)
                apex = p_left
                apex_i = left_i
                p_left = p_right = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        # tighten the left side
        if _cross(apex, p_left, left) <= 0.0:
            if apex == p_left or _cross(apex, p_right, left) > 0.0:
                p_left = left
                left_i = i
            else:
                if p_right != pts[-1]:
                    pts.append(p_right)
                apex = p_right
                apex_i = right_i
                p_left = p_right = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        i += 1
    if pts[-1] != end:
        pts.append(end)
    # drop accidental duplicates
    dedup = [pts[0]]
    for p in pts[1:]:
        if geo.dist(p, dedup[-1]) > 1e-12:
            dedup.append(p)
    return ApexPolyline(points=dedup)


# ---------------------------------------------------------------------------
# corridor containment helpers
# ---------------------------------------------------------------------------

def point_in_corridor(mesh, corridor, p, tol=1e-6):
    """True when p lies within tol of some corridor simplex."""
    for t in corridor.simplexes:
        pts = mesh.triangle_points(t)
        if (geo.orient(pts[0], pts[1], p) >= -tol * mesh.diag
                and geo.orient(pts[1], pts[2], p) >= -tol * mesh.diag
                and geo.orient(pts[2], pts[0], p) >= -tol * mesh.diag):
            return True
        d = min(geo.point_segment_distance(p, pts[i], pts[(i + 1) % 3])
                for i in range(3))
        if d <= tol:
            return True
    return False


# ---------------------------------------------------------------------------
# apex inflation
# ---------------------------------------------------------------------------

def inflate_apexes(mesh, corridor, polyline, radius):
    """Replace constraint-hugging apexes with tangent arcs of given radius.

    An interior apex keeps the straight corner when the chord skipping it
    crosses no constrained edge, or when the tangent arc would leave the
    corridor.  Raises InfeasibleSeedError when an arc's tangent offset
    exceeds an adjoining segment's remaining length.
    """
    if radius <= 0.0:
        raise GeometryError("turning radius must be positive")
    pts = polyline.points
    if len(pts) < 3:
        seg = SeedSegment("line", pts[0], pts[-1], geo.dist(pts[0], pts[-1]))
        return DubinsSeed(segments=[seg], radius=radius)

    # available length on each polyline segment, consumed by arc tangents
    seg_len = [geo.dist(a, b) for a, b in zip(pts, pts[1:])]
    consumed_front = [0.0] * len(seg_len)  # used at the segment's start
    consumed_back = [0.0] * len(seg_len)   # used at the segment's end

    arcs = {}
    for k in range(1, len(pts) - 1):
        prev_pt, apex, next_pt = pts[k - 1], pts[k], pts[k + 1]
        u1 = np.array(apex) - np.array(prev_pt)
        u2 = np.array(next_pt) - np.array(apex)
        n1, n2 = np.linalg.norm(u1), np.linalg.norm(u2)
        u1 /= n1
        u2 /= n2
        turn = math.atan2(u1[0] * u2[1] - u1[1] * u2[0], float(u1 @ u2))
        if abs(turn) < 1e-9:
            continue
        if not mesh.segment_crosses_constraint(prev_pt, next_pt):
            continue  # straight corner remains a feasible seed
        d = radius * math.tan(abs(turn) / 2.0)
        if (d > seg_len[k - 1] - consumed_back[k - 1] - consumed_front[k - 1]
                + 1e-12
                or d > seg_len[k] + 1e-12):
            raise InfeasibleSeedError(
                f"apex {k} at {apex}: tangent offset {d:.3f} ft exceeds "
                "adjoining segment length", apex_index=k)
        t1 = tuple(np.array(apex) - d * u1)
        t2 = tuple(np.array(apex) + d * u2)
        side = 1.0 if turn > 0 else -1.0
        normal = side * np.array([-u1[1], u1[0]])
        center = tuple(np.array(t1) + radius * normal)
        a0 = math.atan2(t1[1] - center[1], t1[0] - center[0])
        arc = SeedSegment("arc", t1, t2, radius * abs(turn), center=center,
                          radius=radius, angle0=a0, sweep=turn)
        # reject arcs that leave the corridor
        ok = all(point_in_corridor(mesh, corridor, arc.point_at(s)[0], 1e-6)
                 for s in np.linspace(0, arc.length, 9))
        if not ok:
            continue
        consumed_back[k - 1] += d
        consumed_front[k] += d
        arcs[k] = arc

    segments = []
    cursor = pts[0]
    for k in range(1, len(pts) - 1):
        if k in arcs:
            arc = arcs[k]
            if geo.dist(cursor, arc.p0) > 1e-12:
                segments.append(SeedSegment("line", cursor, arc.p0,
                                            geo.dist(cursor, arc.p0)))
            segments.append(arc)
            cursor = arc.p1
        else:
            # corner kept: straight run to the apex itself
            if geo.dist(cursor, pts[k]) > 1e-12:
                segments.append(SeedSegment("line", cursor, pts[k],
                                            geo.dist(cursor, pts[k])))
            cursor = pts[k]
    if geo.dist(cursor, pts[-1]) > 1e-12:
        segments.append(SeedSegment("line", cursor, pts[-1],
                                    geo.dist(cursor, pts[-1])))
    return DubinsSeed(segments=segments, radius=radius)


# ---------------------------------------------------------------------------
# timing
# ---------------------------------------------------------------------------

def seed_times(seed_lengths, limits):
    """Flight-time budget from per-aircraft seed lengths and vehicle limits.

    ct_min is the single-orbit period at maximum speed on the radius
    R = v_max / theta_dot_max; ct_max is the same circle flown at v_min.
    Orbit counts use the smallest N >= 1 whose window [N ct_min, N ct_max]
    admits the time difference; differences below 0.5 ct_min get no orbit
    and differences in [0.5 ct_min, ct_min) get one speed-modulated orbit.
    """
    if len(seed_lengths) < 1:
        raise BudgetError("at least one seed is required")
    fts = [length / limits.v_max for length in seed_lengths]
    order = sorted(range(len(fts)), key=lambda i: (-fts[i], i))
    lead_ft = fts[order[0]]
    radius = turning_radius(limits.v_max, limits.theta_dot_max)
    ct_min = 2.0 * math.pi / limits.theta_dot_max
    ct_max = 2.0 * math.pi * radius / limits.v_min
    tds = [lead_ft - ft for ft in fts]
    counts = []
    for i, td in enumerate(tds):
        if i == order[0] or td < 0.5 * ct_min:
            counts.append(0)
            continue
        n = None
        k = 1
        while k * ct_min <= td + ct_min:
            if k * ct_min <= td <= k * ct_max:
                n = k
                break
            k += 1
        if n is None:
            if td < ct_min:
                n = 1  # speed-modulated single orbit
            else:
                gaps = f"td={td:.3f}s falls between orbit windows " \
                       f"(ct_min={ct_min:.3f}, ct_max={ct_max:.3f})"
                raise BudgetError(gaps)
        counts.append(n)
    return TimingBudget(flight_times=fts, order=order, time_differences=tds,
                        orbit_counts=counts, ct_min=ct_min, ct_max=ct_max)


def seed_trajectory(seed, v_max, n_samples):
    """Arc-length-uniform state samples along a seed path.

    Returns an (n, 5) array of (t, x, y, heading, speed) with the heading
    unwrapped (continuous accumulation, no [-pi, pi] wrap).
    """
    if n_samples < 2:
        raise GeometryError("need at least 2 samples")
    total = seed.length
    cum = np.concatenate([[0.0], np.cumsum([s.length for s in seed.segments])])
    out = np.zeros((n_samples, 5))
    prev_heading = None
    for k, s in enumerate(np.linspace(0.0, total, n_samples)):
        j = int(np.searchsorted(cum, s, side="right") - 1)
        j = min(j, len(seed.segments) - 1)
        (x, y), heading = seed.segments[j].point_at(s - cum[j])
        if prev_heading is not None:
            while heading - prev_heading > math.pi:
                heading -= 2 * math.pi
            while heading - prev_heading < -math.pi:
                heading += 2 * math.pi
        prev_heading = heading
        out[k] = (s / v_max, x, y, heading, v_max)
    return out
