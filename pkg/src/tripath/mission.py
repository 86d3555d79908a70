"""Mission planning: orbit and phased-transit optimal control.

The planner coordinates simultaneous arrival.  The aircraft with the
longest geometric seed flies a minimum-time transit; every other
aircraft absorbs its spare time in a fixed-radius orbit near its start
and then flies a fixed-duration transit, so orbit + transit totals are
equal across the fleet.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .collocation import PhaseSpec, Transcription, barycentric_weights
from .corridor import assign_target_edges, astar_corridor
from .dynamics import barycentric_derivative, cartesian_derivative
from .errors import (BudgetError, GeometryError, NoPathError, PlanningError,
                     TripathError)
from .mesh import prune_keep_out, triangulate_cdt
from .seed import (funnel_path, inflate_apexes, seed_times, seed_trajectory,
                   turning_radius)
from .sqp import solve

_REG_WEIGHT = 1e-4
_MIN_PHASE_TIME = 1e-3
# pinned-duration seeding stage for minimum-time transits: duration as a
# multiple of the seed flight time, and how feasible the stage must get
_STAGE_TIME_FACTOR = 1.05
_STAGE_TOL_CON = 1e-4


def _end_coeffs(nodes):
    """Lagrange basis values at tau = +1 for interpolation from the nodes."""
    if len(nodes) == 1:
        return np.array([1.0])
    w = barycentric_weights(nodes)
    c = w / (1.0 - nodes)
    return c / c.sum()


# ---------------------------------------------------------------------------
# result containers
# ---------------------------------------------------------------------------

@dataclass
class OrbitSpec:
    center: tuple
    radius: float
    count: int
    duration: float
    entry_point: tuple
    entry_heading: float
    entry_speed: float
    direction: int            # +1 counter-clockwise, -1 clockwise

    def __post_init__(self):
        if self.radius <= 0.0:
            raise GeometryError("orbit radius must be positive")
        if self.count < 1:
            raise BudgetError("orbit count must be >= 1")


class _SampledTrajectory:
    """Shared interpolation over a list of solved phase blocks."""

    def __init__(self, blocks, x):
        self.blocks = blocks
        self.x = x
        self.phase_spans = []
        for b in blocks:
            _, _, t0, tf = b.unpack(x)
            self.phase_spans.append((float(t0), float(tf)))

    @property
    def t_start(self):
        return self.phase_spans[0][0]

    @property
    def t_end(self):
        return self.phase_spans[-1][1]

    def _locate(self, t):
        for p, (t0, tf) in enumerate(self.phase_spans):
            if t <= tf or p == len(self.blocks) - 1:
                return p, t0, tf
        return len(self.blocks) - 1, *self.phase_spans[-1]

    def _raw_sample(self, times):
        rows_s, rows_u, phases = [], [], []
        for t in np.atleast_1d(times):
            p, t0, tf = self._locate(float(t))
            tau = np.clip(2.0 * (t - t0) / max(tf - t0, 1e-12) - 1.0,
                          -1.0, 1.0)
            rows_s.append(self.blocks[p].interpolate_states(self.x, tau))
            rows_u.append(self.blocks[p].interpolate_controls(self.x, tau))
            phases.append(p)
        return np.array(rows_s), np.array(rows_u), np.array(phases)


class PhasedTrajectory(_SampledTrajectory):
    """Solved multi-phase barycentric transit."""

    def __init__(self, mesh, corridor, blocks, x, solution):
        super().__init__(blocks, x)
        self.mesh = mesh
        self.corridor = corridor
        self.solution = solution
        self.transit_time = self.t_end - self.t_start

    def sample(self, times):
        """Cartesian records at the given local times (0 = transit start)."""
        s, u, phases = self._raw_sample(times)
        pos = np.empty((len(s), 2))
        for k, p in enumerate(phases):
            tf = self.mesh.transform(self.corridor.simplexes[p])
            pos[k] = tf.from_barycentric(s[k, :3])
        return {"x": pos[:, 0], "y": pos[:, 1], "theta": s[:, 3],
                "theta_dot": s[:, 4], "v": s[:, 5],
                "gamma": u[:, 0], "a": u[:, 1], "phase": phases}


class OrbitTrajectory(_SampledTrajectory):
    """Solved minimum-acceleration orbit."""

    def __init__(self, spec, blocks, x, solution, j1):
        super().__init__(blocks, x)
        self.spec = spec
        self.solution = solution
        self.j1 = j1
        self.duration = self.t_end - self.t_start

    def sample(self, times):
        s, u, phases = self._raw_sample(times)
        return {"x": s[:, 0], "y": s[:, 1], "theta": s[:, 2],
                "theta_dot": s[:, 3], "v": s[:, 4],
                "gamma": u[:, 0], "a": u[:, 1], "phase": phases}

    def max_path_residual(self):
        """Largest orbit-circle residual over all collocation nodes."""
        worst = 0.0
        cx, cy = self.spec.center
        for b in self.blocks:
            states, _, _, _ = b.unpack(self.x)
            res = (states[:-1, 0] - cx) ** 2 + (states[:-1, 1] - cy) ** 2 \
                - self.spec.radius ** 2
            worst = max(worst, float(np.abs(res).max()))
        return worst


@dataclass
class AircraftPlan:
    index: int
    corridor: object
    seed: object
    seed_time: float
    orbit: object             # OrbitTrajectory or None
    transit: PhasedTrajectory
    orbit_duration: float
    transit_time: float
    t_f: float


@dataclass
class MissionSolution:
    mesh: object
    plans: list               # AircraftPlan per aircraft index
    leader: int
    t_f_1: float
    budget: object


# ---------------------------------------------------------------------------
# transit OCP
# ---------------------------------------------------------------------------

def _phase_breaks(mesh, corridor, seed, limits):
    """Arc lengths where the seed crosses each portal, plus dense samples."""
    n_dense = 200 + 120 * corridor.n_phases
    dense = seed_trajectory(seed, limits.v_max, n_dense)
    s_arc = dense[:, 0] * limits.v_max
    total = seed.length
    breaks = [0.0]
    p = 0
    for k in range(n_dense):
        pt = dense[k, 1:3]
        while p < corridor.n_phases - 1:
            w_next = mesh.transform(corridor.simplexes[p + 1]) \
                .to_barycentric(pt)
            w_here = mesh.transform(corridor.simplexes[p]).to_barycentric(pt)
            if w_next.min() >= -1e-9 and w_here.min() < -1e-9:
                breaks.append(float(s_arc[k]))
                p += 1
            else:
                break
    while len(breaks) < corridor.n_phases:
        # portal grazes (apex exactly on a portal vertex): spread evenly
        missing = corridor.n_phases - len(breaks)
        last = breaks[-1]
        step = (total - last) / (missing + 1)
        breaks.extend(last + step * (i + 1) for i in range(missing))
    breaks.append(total)
    breaks = np.asarray(breaks)
    gap = max(total * 1e-4, 1e-6)
    for i in range(1, len(breaks)):
        breaks[i] = max(breaks[i], breaks[i - 1] + gap)
    breaks[-1] = total
    for i in range(len(breaks) - 2, 0, -1):
        breaks[i] = min(breaks[i], breaks[i + 1] - gap)
    return breaks, dense, s_arc


def plan_transit(mesh, corridor, seed, limits, degree,
                 target_midpoint, final_heading, target_time=None,
                 tol=1e-6, max_iter=500, verbose=False):
    """Solve the phased corridor OCP.

    With target_time absent the transit is minimum-time (plus a small
    control regularization); with it present the total transit duration
    is pinned and the objective is pure control effort.
    """
    breaks, dense, s_arc = _phase_breaks(mesh, corridor, seed, limits)
    total = seed.length
    n_phases = corridor.n_phases
    start_point = (float(dense[0, 1]), float(dense[0, 2]))

    # branch-matched arrival heading
    raw_heading = dense[:, 3]
    fh = final_heading + 2.0 * np.pi * round(
        (float(raw_heading[-1]) - final_heading) / (2.0 * np.pi))

    def build(tt, guesses=None):
        """Transcribe the corridor OCP for a pinned (tt) or free duration.

        guesses, when given, carries per-phase (states, controls, t0, tf)
        arrays and replaces the geometric seed as the starting point.
        """
        if tt is None:
            t_hi = 2.0 * total / limits.v_max + 10.0
            v_guess = limits.v_max
        else:
            t_hi = tt
            v_guess = float(np.clip(total / tt,
                                    limits.v_min, limits.v_max))
        time_of = lambda s: s / total * (tt if tt else total / limits.v_max)
        # dynamically consistent reference: heading blended into the
        # arrival value, heading rate smoothed inside the steering
        # budget, steering rate from its slope
        heading_dense, theta_dot_dense, gamma_dense = _reference_profiles(
            s_arc, raw_heading, fh, v_guess, limits)
        start_heading = float(heading_dense[0])

        tr = Transcription()
        blocks = []
        tau_full = _radau_full(degree)
        for p in range(n_phases):
            t_simplex = corridor.simplexes[p]
            transform = mesh.transform(t_simplex)
            lo_s, hi_s = breaks[p], breaks[p + 1]
            mask = (s_arc >= lo_s - 1e-9) & (s_arc <= hi_s + 1e-9)
            h_lo = float(heading_dense[mask].min()) if mask.any() \
                else start_heading
            h_hi = float(heading_dense[mask].max()) if mask.any() \
                else start_heading
            spec = PhaseSpec(
                n_states=6, n_controls=2, degree=degree,
                dynamics=lambda s, u, tf=transform:
                    barycentric_derivative(tf, s, u),
                state_lower=np.array([0.0, 0.0, 0.0, h_lo - np.pi,
                                      -limits.theta_dot_max, limits.v_min]),
                state_upper=np.array([1.0, 1.0, 1.0, h_hi + np.pi,
                                      limits.theta_dot_max, limits.v_max]),
                control_lower=np.array([-limits.gamma_max, -limits.a_max]),
                control_upper=np.array([limits.gamma_max, limits.a_max]),
                t0_bounds=(0.0, 0.0) if p == 0 else (0.0, t_hi),
                tf_bounds=((tt, tt)
                           if tt is not None and p == n_phases - 1
                           else (0.0, t_hi)),
                duration_bounds=(_MIN_PHASE_TIME,
                                 mesh.longest_edge(t_simplex) / limits.v_min),
                name=f"phase{p}")
            if guesses is not None:
                sg, cg, ta, tb = guesses[p]
            else:
                # state guess from the seed samples
                sg = np.zeros((degree + 1, 6))
                s_pts = lo_s + 0.5 * (tau_full + 1.0) * (hi_s - lo_s)
                for i, sp in enumerate(s_pts):
                    x = float(np.interp(sp, s_arc, dense[:, 1]))
                    y = float(np.interp(sp, s_arc, dense[:, 2]))
                    w = transform.to_barycentric((x, y))
                    sg[i, :3] = np.clip(w, 0.0, 1.0)
                    sg[i, 3] = float(np.interp(sp, s_arc, heading_dense))
                    sg[i, 4] = float(np.clip(
                        np.interp(sp, s_arc, theta_dot_dense),
                        -limits.theta_dot_max, limits.theta_dot_max))
                    sg[i, 5] = v_guess
                cg = np.zeros((degree, 2))
                s_nodes = lo_s + 0.5 * (tau_full[:-1] + 1.0) * (hi_s - lo_s)
                cg[:, 0] = np.interp(s_nodes, s_arc, gamma_dense)
                ta, tb = time_of(lo_s), time_of(hi_s)
            block = tr.add_phase(spec, sg, cg, ta, tb)
            blocks.append(block)

        _add_transit_constraints(tr, blocks, mesh, corridor, limits,
                                 start_point, start_heading,
                                 target_midpoint, final_heading)
        reg = lambda s, u: u[:, 0] ** 2 + u[:, 1] ** 2
        if tt is None:
            tf_last = blocks[-1].tf_index
            tr.set_objective(lambda x: float(x[tf_last]) + _REG_WEIGHT
                             * sum(b.quadrature(x, reg) for b in blocks))
        else:
            tr.set_objective(lambda x: sum(b.quadrature(x, reg)
                                           for b in blocks))
        return tr, blocks

    guesses = None
    if target_time is None:
        # a minimum-time objective started from the geometric seed drags
        # the duration below what the steering-rate budget can reach and
        # strands the solve at an infeasible stationary point; solve a
        # pinned-duration, effort-only stage first and restart the
        # minimum-time problem from its (feasible) trajectory
        stage_time = _STAGE_TIME_FACTOR * total / limits.v_max
        tr_a, blocks_a = build(stage_time)
        sol_a = solve(tr_a.to_nlp(), tol_kkt=1e3, tol_con=_STAGE_TOL_CON,
                      max_iter=max_iter, verbose=verbose)
        if sol_a.feasibility > 1e-3:
            raise PlanningError(
                f"transit seeding solve ended with status '{sol_a.status}' "
                f"(feasibility {sol_a.feasibility:.3e})",
                aircraft=corridor.aircraft, stage="transit")
        guesses = _phase_guesses(blocks_a, sol_a.x, degree)

    tr, blocks = build(target_time, guesses)
    sol = solve(tr.to_nlp(), tol_kkt=tol, tol_con=tol, max_iter=max_iter,
                verbose=verbose)
    if sol.status != "optimal":
        raise PlanningError(
            f"transit solve ended with status '{sol.status}' "
            f"(feasibility {sol.feasibility:.3e}, kkt {sol.kkt:.3e})",
            aircraft=corridor.aircraft, stage="transit")
    return PhasedTrajectory(mesh, corridor, blocks, sol.x, sol)


def _phase_guesses(blocks, x, degree):
    """Per-phase (states, controls, t0, tf) extracted from a solution."""
    out = []
    for b in blocks:
        sg = np.array([[x[b.state_index(i, k)] for k in range(6)]
                       for i in range(degree + 1)])
        cg = np.array([[x[b.control_index(q, j)] for j in range(2)]
                       for q in range(degree)])
        out.append((sg, cg, float(x[b.t0_index]), float(x[b.tf_index])))
    return out


def _radau_full(degree):
    from .collocation import radau_grid
    nodes, _ = radau_grid(degree)
    return np.concatenate([nodes, [1.0]])


def _moving_average(values, window):
    if window < 3:
        return values.copy()
    if window % 2 == 0:
        window += 1
    pad = window // 2
    padded = np.concatenate([np.full(pad, values[0]), values,
                             np.full(pad, values[-1])])
    kernel = np.ones(window) / window
    return np.convolve(padded, kernel, mode="valid")


def _reference_profiles(s_arc, raw_heading, fh, v_guess, limits):
    """Smooth (heading, heading rate, steering rate) along the seed.

    The geometric seed switches heading rate instantaneously at the
    line/arc joints and ends at the corridor direction rather than the
    arrival heading; both would start the solver far outside the
    steering-rate budget.  The reference blends the tail of the heading
    profile into the arrival value, low-passes the implied heading rate,
    clips it inside the limits, and re-integrates so the state and
    control guesses satisfy the kinematic chain to first order.
    """
    total = float(s_arc[-1])
    blend = np.clip((s_arc - 0.6 * total) / (0.4 * total + 1e-12), 0.0, 1.0)
    blend = blend * blend * (3.0 - 2.0 * blend)
    th = raw_heading + blend * (fh - float(raw_heading[-1]))
    window = max(3, len(s_arc) // 10)
    thd = np.gradient(th, s_arc + 1e-12) * v_guess
    thd = _moving_average(_moving_average(thd, window), window)
    thd = np.clip(thd, -0.95 * limits.theta_dot_max,
                  0.95 * limits.theta_dot_max)
    th_ref = np.concatenate([[0.0], np.cumsum(
        0.5 * (thd[1:] + thd[:-1]) * np.diff(s_arc) / v_guess)])
    th_ref += th[0]
    gam = np.gradient(thd, s_arc + 1e-12) * v_guess
    gam = _moving_average(gam, window)
    gam = np.clip(gam, -0.95 * limits.gamma_max, 0.95 * limits.gamma_max)
    return th_ref, thd, gam


def _add_transit_constraints(tr, blocks, mesh, corridor, limits, start_point,
                             start_heading, target_midpoint, final_heading):
    n = blocks[0].spec.degree
    first, last = blocks[0], blocks[-1]

    # initial state: barycentric start position, seed heading, v_max
    w0 = mesh.transform(corridor.simplexes[0]).to_barycentric(start_point)
    i0 = first.state_indices(0)
    vals0 = np.array([w0[0], w0[1], w0[2], start_heading, limits.v_max])
    idx0 = [i0[0], i0[1], i0[2], i0[3], i0[5]]
    tr.add_equality(
        lambda x, ii=tuple(idx0), vv=vals0: x[list(ii)] - vv,
        5, [[j] for j in idx0])

    # terminal state: target-edge midpoint, assigned heading
    last_simplex = corridor.simplexes[-1]
    wf = mesh.transform(last_simplex).to_barycentric(target_midpoint)
    # pick the unwrapped branch closest to the guess end heading
    guess_end = tr.initial_guess()[last.state_index(n, 3)]
    fh = final_heading + 2.0 * np.pi * round((guess_end - final_heading)
                                             / (2.0 * np.pi))
    iN = last.state_indices(n)
    idxf = [iN[0], iN[1], iN[2], iN[3]]
    valsf = np.array([wf[0], wf[1], wf[2], fh])
    tr.add_equality(
        lambda x, ii=tuple(idxf), vv=valsf: x[list(ii)] - vv,
        4, [[j] for j in idxf])

    # junction links between consecutive phases
    for p in range(len(blocks) - 1):
        a, b = blocks[p], blocks[p + 1]
        tri_a = list(map(int, mesh.triangles[corridor.simplexes[p]]))
        tri_b = list(map(int, mesh.triangles[corridor.simplexes[p + 1]]))
        g1, g2 = corridor.portals[p]
        off_a = next(v for v in tri_a if v not in (g1, g2))
        off_b = next(v for v in tri_b if v not in (g1, g2))
        ia_end = a.state_indices(n)
        ib_0 = b.state_indices(0)
        rows = []
        sups = []
        # off-portal weights vanish on both sides of the junction
        rows.append((ia_end[tri_a.index(off_a)], None, 0.0))
        sups.append([ia_end[tri_a.index(off_a)]])
        rows.append((ib_0[tri_b.index(off_b)], None, 0.0))
        sups.append([ib_0[tri_b.index(off_b)]])
        # shared-vertex weights carry across the frame change
        for g in (g1, g2):
            rows.append((ia_end[tri_a.index(g)], ib_0[tri_b.index(g)], None))
            sups.append([ia_end[tri_a.index(g)], ib_0[tri_b.index(g)]])
        # heading, heading rate, speed continuity
        for comp in (3, 4, 5):
            rows.append((ia_end[comp], ib_0[comp], None))
            sups.append([ia_end[comp], ib_0[comp]])
        # time continuity
        rows.append((a.tf_index, b.t0_index, None))
        sups.append([a.tf_index, b.t0_index])

        def link(x, rr=tuple(rows)):
            out = np.empty(len(rr))
            for k, (i, j, const) in enumerate(rr):
                out[k] = x[i] - (const if j is None else x[j])
            return out
        tr.add_equality(link, len(rows), sups)

        # interpolated control continuity across the junction
        coeffs = _end_coeffs(a.nodes)
        for comp in range(2):
            ua = [a.control_index(q, comp) for q in range(n)]
            ub = b.control_index(0, comp)

            def ctrl(x, ua=tuple(ua), ub=ub, cc=coeffs):
                return np.array([float(cc @ x[list(ua)]) - x[ub]])
            tr.add_equality(ctrl, 1, [sorted(ua + [ub])])


# ---------------------------------------------------------------------------
# orbit OCP
# ---------------------------------------------------------------------------

def plan_orbit(spec, limits, degree=10, phases_per_rev=4, tol=1e-6,
               max_iter=500, verbose=False, aircraft=None):
    """Fixed-duration, fixed-boundary minimum-acceleration orbit."""
    ct_min = spec.count * limits.orbit_time_min
    ct_max = spec.count * limits.orbit_time_max
    if not (ct_min - 1e-9 <= spec.duration <= ct_max + 1e-9):
        raise BudgetError(
            f"orbit duration {spec.duration:.3f}s outside "
            f"[{ct_min:.3f}, {ct_max:.3f}]")
    k_phases = phases_per_rev * spec.count
    omega = 2.0 * np.pi * spec.count * spec.direction / spec.duration
    cx, cy = spec.center
    p0 = np.asarray(spec.entry_point, dtype=float)
    phi0 = math.atan2(p0[1] - cy, p0[0] - cx)
    r = spec.radius
    v_ws = abs(omega) * r
    theta_end = spec.entry_heading + 2.0 * np.pi * spec.count * spec.direction
    th_lo = min(spec.entry_heading, theta_end) - 1.0
    th_hi = max(spec.entry_heading, theta_end) + 1.0
    nominal = spec.duration / k_phases

    tr = Transcription()
    blocks = []
    for k in range(k_phases):
        spec_k = PhaseSpec(
            n_states=5, n_controls=2, degree=degree,
            dynamics=lambda s, u: cartesian_derivative(s, u),
            state_lower=np.array([cx - r - 5.0, cy - r - 5.0, th_lo,
                                  -limits.theta_dot_max, limits.v_min]),
            state_upper=np.array([cx + r + 5.0, cy + r + 5.0, th_hi,
                                  limits.theta_dot_max, limits.v_max]),
            control_lower=np.array([-limits.gamma_max, -limits.a_max]),
            control_upper=np.array([limits.gamma_max, limits.a_max]),
            t0_bounds=(0.0, 0.0) if k == 0 else (0.0, spec.duration),
            tf_bounds=((spec.duration, spec.duration)
                       if k == k_phases - 1 else (0.0, spec.duration)),
            duration_bounds=(0.2 * nominal,
                             min(spec.duration, 5.0 * nominal)),
            name=f"orbit{k}")
        tau_full = _radau_full(degree)
        t_lo, t_hi_k = k * nominal, (k + 1) * nominal
        t_pts = t_lo + 0.5 * (tau_full + 1.0) * (t_hi_k - t_lo)
        sg = np.zeros((degree + 1, 5))
        sg[:, 0] = cx + r * np.cos(phi0 + omega * t_pts)
        sg[:, 1] = cy + r * np.sin(phi0 + omega * t_pts)
        sg[:, 2] = spec.entry_heading + omega * t_pts
        sg[:, 3] = omega
        sg[:, 4] = v_ws
        block = tr.add_phase(spec_k, sg, np.zeros((degree, 2)), t_lo, t_hi_k)
        blocks.append(block)

    n = degree
    first, last = blocks[0], blocks[-1]
    i0 = first.state_indices(0)
    iN = last.state_indices(n)
    bc_idx = [i0[0], i0[1], i0[2], i0[4], iN[0], iN[1], iN[2], iN[4]]
    bc_val = np.array([p0[0], p0[1], spec.entry_heading, spec.entry_speed,
                       p0[0], p0[1], theta_end, spec.entry_speed])
    tr.add_equality(lambda x, ii=tuple(bc_idx), vv=bc_val:
                    x[list(ii)] - vv, 8, [[j] for j in bc_idx])

    for b in blocks:
        xi = [b.state_index(i, 0) for i in range(n)]
        yi = [b.state_index(i, 1) for i in range(n)]

        def circle(x, xi=tuple(xi), yi=tuple(yi)):
            return ((x[list(xi)] - cx) ** 2 + (x[list(yi)] - cy) ** 2
                    - r * r)
        tr.add_equality(circle, n, [[a, b_] for a, b_ in zip(xi, yi)])

    for k in range(k_phases - 1):
        a, b = blocks[k], blocks[k + 1]
        ia, ib = a.state_indices(n), b.state_indices(0)
        rows = [(ia[c], ib[c]) for c in range(5)] + [(a.tf_index, b.t0_index)]

        def link(x, rr=tuple(rows)):
            return np.array([x[i] - x[j] for i, j in rr])
        tr.add_equality(link, len(rows), [[i, j] for i, j in rows])
        coeffs = _end_coeffs(a.nodes)
        for comp in range(2):
            ua = [a.control_index(q, comp) for q in range(n)]
            ub = b.control_index(0, comp)

            def ctrl(x, ua=tuple(ua), ub=ub, cc=coeffs):
                return np.array([float(cc @ x[list(ua)]) - x[ub]])
            tr.add_equality(ctrl, 1, [sorted(ua + [ub])])

    accel = lambda s, u: u[:, 1] ** 2
    steer = lambda s, u: u[:, 0] ** 2
    tr.set_objective(lambda x: sum(b.quadrature(x, accel) for b in blocks)
                     + 1e-8 * sum(b.quadrature(x, steer) for b in blocks))
    sol = solve(tr.to_nlp(), tol_kkt=tol, tol_con=tol, max_iter=max_iter,
                verbose=verbose)
    if sol.status != "optimal":
        raise PlanningError(
            f"orbit solve ended with status '{sol.status}' "
            f"(feasibility {sol.feasibility:.3e})",
            aircraft=aircraft, stage="orbit")
    j1 = sum(b.quadrature(sol.x, accel) for b in blocks)
    return OrbitTrajectory(spec, blocks, sol.x, sol, j1)


# ---------------------------------------------------------------------------
# mission orchestration
# ---------------------------------------------------------------------------

def build_mission_mesh(scenario):
    """Triangulate the domain with keep-out and target edges constrained."""
    points = []
    edges = []
    shapes = list(scenario.keep_outs) + [scenario.target]
    for poly in shapes:
        base = len(points)
        verts = poly.vertices
        points.extend((float(x), float(y)) for x, y in verts)
        m = len(verts)
        edges.extend((base + i, base + (i + 1) % m) for i in range(m))
    mesh = triangulate_cdt(points, edges, scenario.bounds)
    return prune_keep_out(mesh, shapes)


def _orbit_count(td, ct_min, ct_max):
    """Banded orbit-count rule for a time difference td >= 0."""
    if td < 0.5 * ct_min:
        return 0
    k = 1
    while k * ct_min <= td + ct_min:
        if k * ct_min <= td <= k * ct_max:
            return k
        k += 1
    if td < ct_min:
        return 1
    raise BudgetError(f"time difference {td:.3f}s falls between orbit "
                      f"windows (ct_min={ct_min:.3f}, ct_max={ct_max:.3f})")


def _assign(scenario, assignments):
    """Aircraft -> target edge, explicit indexes or min total distance."""
    n = scenario.n_aircraft
    explicit = [a.target_edge for a in scenario.aircraft]
    if all(e is not None for e in explicit):
        return [assignments[e] for e in explicit]
    starts = [a.start for a in scenario.aircraft]
    if n <= 8:
        best, best_perm = np.inf, None
        for perm in itertools.permutations(range(n)):
            d = sum(geo.dist(starts[i], assignments[perm[i]].midpoint)
                    for i in range(n))
            if d < best - 1e-12:
                best, best_perm = d, perm
        return [assignments[best_perm[i]] for i in range(n)]
    taken = set()
    out = []
    for i in range(n):
        j = min((j for j in range(n) if j not in taken),
                key=lambda j: geo.dist(starts[i], assignments[j].midpoint))
        taken.add(j)
        out.append(assignments[j])
    return out


def _seed_turn_direction(seed):
    """Sign of the first heading change along the seed (+1 ccw, -1 cw)."""
    for seg in seed.segments:
        if seg.kind == "arc" and abs(seg.sweep) > 1e-9:
            return 1 if seg.sweep > 0 else -1
    headings = []
    for seg in seed.segments:
        headings.append(math.atan2(seg.p1[1] - seg.p0[1],
                                   seg.p1[0] - seg.p0[0]))
    for h0, h1 in zip(headings, headings[1:]):
        d = (h1 - h0 + math.pi) % (2 * math.pi) - math.pi
        if abs(d) > 1e-9:
            return 1 if d > 0 else -1
    return 1


def plan_mission(scenario, verbose=False):
    """Plan all aircraft for simultaneous arrival."""
    mesh = build_mission_mesh(scenario)
    n = scenario.n_aircraft
    assignments = _assign(scenario, assign_target_edges(scenario.target, n))
    limits = scenario.limits
    radius = turning_radius(limits.v_max, limits.theta_dot_max)
    degree = scenario.solver.degree
    tol = scenario.solver.tolerance
    max_iter = scenario.solver.max_iter

    # first pass: unpenalized corridors for flight-time ordering
    def corridor_and_seed(i, penalized, penalty):
        start = scenario.aircraft[i].start
        try:
            corr = astar_corridor(mesh, start, assignments[i].edge,
                                  aircraft=i, penalized=penalized,
                                  penalty=penalty)
        except NoPathError:
            raise
        try:
            polyline = funnel_path(mesh, corr, start,
                                   assignments[i].midpoint)
            seed = inflate_apexes(mesh, corr, polyline, radius)
        except TripathError as exc:
            raise PlanningError(f"seed construction failed: {exc}",
                                aircraft=i, stage="seed")
        return corr, seed

    prelim = [corridor_and_seed(i, None, 0.0) for i in range(n)]
    fts = [seed.flight_time(limits.v_max) for _, seed in prelim]
    order = sorted(range(n), key=lambda i: (-fts[i], i))

    # second pass: longest-first with corridor-distinctness penalties
    mean_diam = float(np.mean([mesh.longest_edge(t)
                               for t in mesh.free_simplexes]))
    corridors, seeds = {}, {}
    penalized = set()
    for i in order:
        corr, seed = corridor_and_seed(i, set(penalized), 2.0 * mean_diam)
        corridors[i], seeds[i] = corr, seed
        penalized |= set(corr.simplexes)

    lengths = [seeds[i].length for i in range(n)]
    budget = seed_times(lengths, limits)
    leader = budget.order[0]

    def start_heading(i):
        return seeds[i].segments[0].point_at(0.0)[1]

    lead_transit = plan_transit(
        mesh, corridors[leader], seeds[leader], limits, degree,
        assignments[leader].midpoint, assignments[leader].final_heading,
        target_time=None, tol=tol, max_iter=max_iter, verbose=verbose)
    t_f_1 = lead_transit.transit_time

    plans = [None] * n
    plans[leader] = AircraftPlan(
        index=leader, corridor=corridors[leader], seed=seeds[leader],
        seed_time=budget.flight_times[leader], orbit=None,
        transit=lead_transit, orbit_duration=0.0,
        transit_time=t_f_1, t_f=t_f_1)

    for i in range(n):
        if i == leader:
            continue
        ft = budget.flight_times[i]
        gap = t_f_1 - ft
        count = _orbit_count(max(gap, 0.0), budget.ct_min, budget.ct_max)
        orbit = None
        d = 0.0
        if count >= 1:
            d = float(np.clip(gap, count * budget.ct_min,
                              count * budget.ct_max))
            h0 = start_heading(i)
            direction = _seed_turn_direction(seeds[i])
            p0 = scenario.aircraft[i].start
            normal = h0 + direction * math.pi / 2.0
            center = (p0[0] + radius * math.cos(normal),
                      p0[1] + radius * math.sin(normal))
            spec = OrbitSpec(center=center, radius=radius, count=count,
                             duration=d, entry_point=p0, entry_heading=h0,
                             entry_speed=limits.v_max, direction=direction)
            orbit = plan_orbit(spec, limits, degree=max(degree, 10),
                               tol=tol, max_iter=max_iter, verbose=verbose,
                               aircraft=i)
        target_time = t_f_1 - d
        transit = plan_transit(
            mesh, corridors[i], seeds[i], limits, degree,
            assignments[i].midpoint, assignments[i].final_heading,
            target_time=target_time, tol=tol, max_iter=max_iter,
            verbose=verbose)
        plans[i] = AircraftPlan(
            index=i, corridor=corridors[i], seed=seeds[i], seed_time=ft,
            orbit=orbit, transit=transit, orbit_duration=d,
            transit_time=transit.transit_time, t_f=d + transit.transit_time)

    return MissionSolution(mesh=mesh, plans=plans, leader=leader,
                           t_f_1=t_f_1, budget=budget)


def coordination_report(solution):
    """Per-aircraft timing summary with the coordination residuals."""
    rows = []
    for plan in solution.plans:
        j2 = abs(solution.t_f_1 - plan.t_f)
        rows.append({
            "aircraft": plan.index,
            "seed_time": plan.seed_time,
            "orbit_count": plan.orbit.spec.count if plan.orbit else 0,
            "orbit_duration": plan.orbit_duration,
            "transit_time": plan.transit_time,
            "t_f": plan.t_f,
            "j1": plan.orbit.j1 if plan.orbit else 0.0,
            "j2": j2,
        })
    return {"leader": solution.leader, "t_f_1": solution.t_f_1,
            "aircraft": rows, "max_j2": max(r["j2"] for r in rows)}
