"""Orthogonal collocation transcription on the half-open Radau grid.

A phase discretizes an interval [t0, tf] with N collocation nodes on
[-1, 1) plus a noncollocated right endpoint.  States live at all N + 1
points, controls at the N nodes only.  Dynamics enter through defect
equalities D X = (tf - t0) / 2 * F and integral costs through the
matching quadrature rule, which is exact through degree 2N - 2.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_legendre, roots_jacobi

from .errors import SolverError


def radau_grid(n):
    """Collocation nodes (including -1) and quadrature weights.

    The interior nodes are the roots of the (0, 1) Jacobi polynomial of
    degree n - 1, equivalently the nonunit roots of P_{n-1} + P_n.
    """
    if n < 1:
        raise SolverError("need at least one collocation node")
    if n == 1:
        return np.array([-1.0]), np.array([2.0])
    tau, _ = roots_jacobi(n - 1, 0.0, 1.0)
    nodes = np.concatenate([[-1.0], np.sort(tau)])
    weights = np.empty(n)
    weights[0] = 2.0 / n ** 2
    p = eval_legendre(n - 1, nodes[1:])
    weights[1:] = (1.0 - nodes[1:]) / (n ** 2 * p ** 2)
    return nodes, weights


def barycentric_weights(points):
    pts = np.asarray(points, dtype=float)
    w = np.ones(len(pts))
    for j in range(len(pts)):
        diff = pts[j] - np.delete(pts, j)
        w[j] = 1.0 / np.prod(diff)
    return w


def differentiation_matrix(n):
    """Derivative operator from N + 1 point values to the N nodes.

    Row i gives d/dtau of the interpolating polynomial at node tau_i;
    columns run over the N nodes followed by the endpoint +1.
    """
    nodes, _ = radau_grid(n)
    full = np.concatenate([nodes, [1.0]])
    w = barycentric_weights(full)
    m = len(full)
    d = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            if i != j:
                d[i, j] = (w[j] / w[i]) / (full[i] - full[j])
        d[i, i] = -d[i, np.arange(m) != i].sum()
    return d


def lagrange_interpolate(points, values, t):
    """Barycentric evaluation of the interpolant through (points, values).

    values may be (m,) or (m, k); t scalar or array.  Exact at nodes.
    """
    pts = np.asarray(points, dtype=float)
    vals = np.asarray(values, dtype=float)
    w = barycentric_weights(pts)
    tq = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((len(tq),) + vals.shape[1:])
    for k, tk in enumerate(tq):
        hit = np.nonzero(np.abs(pts - tk) < 1e-14)[0]
        if hit.size:
            out[k] = vals[hit[0]]
        else:
            c = w / (tk - pts)
            out[k] = c @ vals / c.sum()
    return out[0] if np.ndim(t) == 0 else out


@dataclass
class PhaseSpec:
    """One phase of a multi-phase trajectory problem."""

    n_states: int
    n_controls: int
    degree: int
    dynamics: callable
    state_lower: np.ndarray
    state_upper: np.ndarray
    control_lower: np.ndarray
    control_upper: np.ndarray
    t0_bounds: tuple
    tf_bounds: tuple
    duration_bounds: tuple
    name: str = ""


class PhaseBlock:
    """Index bookkeeping and residual evaluation for one phase."""

    def __init__(self, spec, offset):
        self.spec = spec
        self.offset = offset
        self.nodes, self.weights = radau_grid(spec.degree)
        self.diff = differentiation_matrix(spec.degree)
        self.full_nodes = np.concatenate([self.nodes, [1.0]])
        n, nx, nu = spec.degree, spec.n_states, spec.n_controls
        self.n_vars = (n + 1) * nx + n * nu + 2
        self._u_off = offset + (n + 1) * nx
        self.t0_index = offset + self.n_vars - 2
        self.tf_index = offset + self.n_vars - 1

    def state_index(self, point, comp):
        return self.offset + point * self.spec.n_states + comp

    def control_index(self, node, comp):
        return self._u_off + node * self.spec.n_controls + comp

    def state_indices(self, point):
        nx = self.spec.n_states
        return list(range(self.offset + point * nx,
                          self.offset + (point + 1) * nx))

    def control_indices(self, node):
        nu = self.spec.n_controls
        return list(range(self._u_off + node * nu,
                          self._u_off + (node + 1) * nu))

    def unpack(self, x):
        n, nx, nu = self.spec.degree, self.spec.n_states, self.spec.n_controls
        states = x[self.offset:self.offset + (n + 1) * nx].reshape(n + 1, nx)
        controls = x[self._u_off:self._u_off + n * nu].reshape(n, nu)
        return states, controls, x[self.t0_index], x[self.tf_index]

    def defects(self, x):
        states, controls, t0, tf = self.unpack(x)
        f = self.spec.dynamics(states[:-1], controls)
        return (self.diff @ states - 0.5 * (tf - t0) * f).ravel()

    def defect_supports(self):
        """Variable indices each defect row can depend on."""
        n, nx = self.spec.degree, self.spec.n_states
        col = [[self.state_index(p, k) for p in range(n + 1)]
               for k in range(nx)]
        rows = []
        for i in range(n):
            base = (self.state_indices(i) + self.control_indices(i)
                    + [self.t0_index, self.tf_index])
            for k in range(nx):
                rows.append(sorted(set(base + col[k])))
        return rows

    def quadrature(self, x, integrand):
        """(tf - t0)/2 * sum_i w_i * integrand_i over the nodes."""
        states, controls, t0, tf = self.unpack(x)
        vals = np.asarray(integrand(states[:-1], controls), dtype=float)
        return 0.5 * (tf - t0) * float(self.weights @ vals)

    def control_at_end(self, x):
        """Controls extrapolated to the noncollocated endpoint."""
        _, controls, _, _ = self.unpack(x)
        if self.spec.degree == 1:
            return controls[0].copy()
        return lagrange_interpolate(self.nodes, controls, 1.0)

    def interpolate_states(self, x, tau):
        states, _, _, _ = self.unpack(x)
        return lagrange_interpolate(self.full_nodes, states, tau)

    def interpolate_controls(self, x, tau):
        _, controls, _, _ = self.unpack(x)
        if self.spec.degree == 1:
            out = np.broadcast_to(controls[0], (np.size(tau),
                                                self.spec.n_controls))
            return out[0].copy() if np.ndim(tau) == 0 else np.array(out)
        return lagrange_interpolate(self.nodes, controls, tau)


@dataclass
class ExtraConstraint:
    func: callable
    size: int
    supports: list
    kind: str  # "eq" or "ineq" (ineq means func(x) >= 0)


class Transcription:
    """Assembles phases, links, and boundary conditions into one NLP."""

    def __init__(self):
        self.phases = []
        self.extras = []
        self.objective = None
        self._guesses = []

    @property
    def n_vars(self):
        return sum(p.n_vars for p in self.phases)

    def add_phase(self, spec, state_guess, control_guess, t0_guess, tf_guess):
        block = PhaseBlock(spec, self.n_vars)
        self.phases.append(block)
        n, nx, nu = spec.degree, spec.n_states, spec.n_controls
        sg = np.asarray(state_guess, dtype=float)
        cg = np.asarray(control_guess, dtype=float)
        if sg.shape != (n + 1, nx) or cg.shape != (n, nu):
            raise SolverError("guess shape does not match the phase grid")
        self._guesses.append((sg, cg, float(t0_guess), float(tf_guess)))
        lo, hi = spec.duration_bounds
        tb = [block.t0_index, block.tf_index]
        self.extras.append(ExtraConstraint(
            lambda x, b=block, lo=lo: np.array(
                [x[b.tf_index] - x[b.t0_index] - lo]),
            1, [tb], "ineq"))
        self.extras.append(ExtraConstraint(
            lambda x, b=block, hi=hi: np.array(
                [hi - x[b.tf_index] + x[b.t0_index]]),
            1, [tb], "ineq"))
        return block

    def add_equality(self, func, size, supports):
        self.extras.append(ExtraConstraint(func, size, supports, "eq"))

    def add_inequality(self, func, size, supports):
        self.extras.append(ExtraConstraint(func, size, supports, "ineq"))

    def set_objective(self, func):
        self.objective = func

    def initial_guess(self):
        x0 = np.empty(self.n_vars)
        for block, (sg, cg, t0, tf) in zip(self.phases, self._guesses):
            x0[block.offset:block._u_off] = sg.ravel()
            x0[block._u_off:block.t0_index] = cg.ravel()
            x0[block.t0_index] = t0
            x0[block.tf_index] = tf
        return x0

    def bounds(self):
        lo = np.full(self.n_vars, -np.inf)
        hi = np.full(self.n_vars, np.inf)
        for block in self.phases:
            s = block.spec
            for p in range(s.degree + 1):
                idx = block.state_indices(p)
                lo[idx] = s.state_lower
                hi[idx] = s.state_upper
            for q in range(s.degree):
                idx = block.control_indices(q)
                lo[idx] = s.control_lower
                hi[idx] = s.control_upper
            lo[block.t0_index], hi[block.t0_index] = s.t0_bounds
            lo[block.tf_index], hi[block.tf_index] = s.tf_bounds
        return lo, hi

    def _collect(self, kind):
        funcs, supports = [], []
        if kind == "eq":
            for block in self.phases:
                funcs.append(block.defects)
                supports.extend(block.defect_supports())
        for ex in self.extras:
            if ex.kind == kind:
                funcs.append(ex.func)
                supports.extend(ex.supports)
        if not funcs:
            return None, []

        def stacked(x, fs=tuple(funcs)):
            return np.concatenate([np.atleast_1d(f(x)) for f in fs])
        return stacked, supports

    def to_nlp(self):
        from .sqp import NLPProblem
        if self.objective is None:
            raise SolverError("objective not set")
        eq, eq_sup = self._collect("eq")
        ineq, ineq_sup = self._collect("ineq")
        lo, hi = self.bounds()
        return NLPProblem(objective=self.objective, x0=self.initial_guess(),
                          lower=lo, upper=hi, equality=eq,
                          inequality=ineq, eq_supports=eq_sup,
                          ineq_supports=ineq_sup)
