import numpy as np
import pytest

from tripath.collocation import PhaseSpec, Transcription
from tripath.sqp import NLPProblem, solve


def _unbounded(n):
    return np.full(n, -np.inf), np.full(n, np.inf)


def test_unconstrained_quadratic():
    target = np.array([1.0, -2.0, 3.0])
    lo, hi = _unbounded(3)
    prob = NLPProblem(objective=lambda x: float(((x - target) ** 2).sum()),
                      x0=np.zeros(3), lower=lo, upper=hi)
    sol = solve(prob)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.x, target, atol=1e-5)


def test_bound_constrained_quadratic():
    # unconstrained minimum (2, 2) clipped by the box to (1, 2)
    prob = NLPProblem(
        objective=lambda x: float((x[0] - 2) ** 2 + (x[1] - 2) ** 2),
        x0=np.array([0.0, 0.0]),
        lower=np.array([-1.0, -1.0]), upper=np.array([1.0, 3.0]))
    sol = solve(prob)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.x, [1.0, 2.0], atol=1e-6)


def test_equality_qp_known_multiplier():
    # min x'x / 2 s.t. x0 + x1 = 1: solution (0.5, 0.5), multiplier 0.5
    lo, hi = _unbounded(2)
    prob = NLPProblem(objective=lambda x: 0.5 * float(x @ x),
                      x0=np.array([3.0, -1.0]), lower=lo, upper=hi,
                      equality=lambda x: np.array([x[0] + x[1] - 1.0]))
    sol = solve(prob)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.x, [0.5, 0.5], atol=1e-6)
    assert abs(abs(sol.multipliers[0]) - 0.5) < 1e-4


def test_rosenbrock():
    lo, hi = _unbounded(2)
    prob = NLPProblem(
        objective=lambda x: float(100.0 * (x[1] - x[0] ** 2) ** 2
                                  + (1.0 - x[0]) ** 2),
        x0=np.array([-1.2, 1.0]), lower=lo, upper=hi)
    sol = solve(prob, max_iter=800)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.x, [1.0, 1.0], atol=1e-4)


def test_inequality_activates():
    # min (x-3)^2 s.t. x <= 1 written as 1 - x >= 0
    lo, hi = _unbounded(1)
    prob = NLPProblem(objective=lambda x: float((x[0] - 3.0) ** 2),
                      x0=np.array([0.0]), lower=lo, upper=hi,
                      inequality=lambda x: np.array([1.0 - x[0]]))
    sol = solve(prob)
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(1.0, abs=1e-5)


def test_inequality_inactive():
    lo, hi = _unbounded(1)
    prob = NLPProblem(objective=lambda x: float((x[0] - 0.25) ** 2),
                      x0=np.array([0.9]), lower=lo, upper=hi,
                      inequality=lambda x: np.array([1.0 - x[0]]))
    sol = solve(prob)
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(0.25, abs=1e-5)


def test_circle_constrained():
    # min x + y on the unit circle: (-r2/2, -r2/2)
    lo, hi = _unbounded(2)
    prob = NLPProblem(objective=lambda x: float(x[0] + x[1]),
                      x0=np.array([1.0, 0.0]), lower=lo, upper=hi,
                      equality=lambda x: np.array([x @ x - 1.0]))
    sol = solve(prob)
    assert sol.status == "optimal"
    r = -np.sqrt(0.5)
    np.testing.assert_allclose(sol.x, [r, r], atol=1e-5)


def test_infeasible_detected():
    lo = np.array([0.0])
    hi = np.array([1.0])
    prob = NLPProblem(objective=lambda x: float(x[0] ** 2),
                      x0=np.array([0.5]), lower=lo, upper=hi,
                      equality=lambda x: np.array([x[0] - 5.0]))
    sol = solve(prob, max_iter=100)
    assert sol.status == "infeasible"


def test_deterministic_repeat():
    lo, hi = _unbounded(2)

    def make():
        return NLPProblem(
            objective=lambda x: float(100.0 * (x[1] - x[0] ** 2) ** 2
                                      + (1.0 - x[0]) ** 2),
            x0=np.array([-1.2, 1.0]), lower=lo, upper=hi,
            inequality=lambda x: np.array([2.0 - x[0] - x[1]]))
    a = solve(make(), max_iter=800)
    b = solve(make(), max_iter=800)
    assert a.x.tobytes() == b.x.tobytes()
    assert a.iterations == b.iterations


def test_fd_jacobian_against_central_difference(rng):
    from tripath.sqp import _ConstraintSystem

    def con(x):
        return np.array([x[0] * x[1] - 1.0, x[2] ** 2 + x[1]])

    lo, hi = _unbounded(3)
    prob = NLPProblem(objective=lambda x: 0.0, x0=np.array([1.0, 2.0, 0.5]),
                      lower=lo, upper=hi, equality=con,
                      eq_supports=[[0, 1], [1, 2]])
    sys_ = _ConstraintSystem(prob, 3)
    # sparse grouping: three columns collapse into two groups
    assert len(sys_.groups) == 2
    for _ in range(20):
        z = rng.uniform(0.5, 2.0, size=3)
        jac = sys_.jacobian(z, sys_.value(z))
        for j in range(3):
            h = 1e-6 * max(1.0, abs(z[j]))
            zp, zm = z.copy(), z.copy()
            zp[j] += h
            zm[j] -= h
            central = (con(zp) - con(zm)) / (2 * h)
            np.testing.assert_allclose(jac[:, j], central, atol=1e-5)


def _double_integrator_nlp(n):
    """Minimum time to rest-to-rest unit translation with |a| <= 1."""
    spec = PhaseSpec(
        n_states=2, n_controls=1, degree=n,
        dynamics=lambda s, u: np.column_stack([s[:, 1], u[:, 0]]),
        state_lower=np.array([-5.0, -5.0]),
        state_upper=np.array([5.0, 5.0]),
        control_lower=np.array([-1.0]), control_upper=np.array([1.0]),
        t0_bounds=(0.0, 0.0), tf_bounds=(0.1, 10.0),
        duration_bounds=(0.1, 10.0))
    tr = Transcription()
    guess_s = np.column_stack([np.linspace(0, 1, n + 1), np.full(n + 1, 0.5)])
    block = tr.add_phase(spec, guess_s, np.zeros((n, 1)), 0.0, 2.5)
    start = [block.state_index(0, 0), block.state_index(0, 1)]
    end = [block.state_index(n, 0), block.state_index(n, 1)]
    tr.add_equality(
        lambda x, i=start: np.array([x[i[0]], x[i[1]]]), 2, [[start[0]],
                                                             [start[1]]])
    tr.add_equality(
        lambda x, i=end: np.array([x[i[0]] - 1.0, x[i[1]]]), 2, [[end[0]],
                                                                 [end[1]]])
    tr.set_objective(lambda x, i=block.tf_index: float(x[i]))
    return tr.to_nlp(), block


def test_minimum_time_double_integrator_single_phase():
    """Single degree-20 segment: the discrete optimum sits slightly above
    the analytic bang-bang time because one polynomial cannot represent
    the control switch.  The expected value is frozen from an SLSQP run
    on the identical problem."""
    nlp, block = _double_integrator_nlp(20)
    sol = solve(nlp, max_iter=300)
    assert sol.status == "optimal"
    assert sol.feasibility <= 1e-6
    assert sol.x[block.tf_index] == pytest.approx(2.002626888957764,
                                                  abs=1e-6)


def two_phase_min_time_integrator(n):
    """Two linked phases with a free interior boundary; the optimizer can
    park the control switch on the boundary and recover t* = 2 exactly."""
    def spec():
        return PhaseSpec(
            n_states=2, n_controls=1, degree=n,
            dynamics=lambda s, u: np.column_stack([s[:, 1], u[:, 0]]),
            state_lower=np.array([-5.0, -5.0]),
            state_upper=np.array([5.0, 5.0]),
            control_lower=np.array([-1.0]), control_upper=np.array([1.0]),
            t0_bounds=(0.0, 10.0), tf_bounds=(0.0, 10.0),
            duration_bounds=(0.05, 10.0))

    tr = Transcription()
    up = np.column_stack([np.linspace(0, 0.5, n + 1),
                          np.linspace(0, 1, n + 1)])
    down = np.column_stack([np.linspace(0.5, 1, n + 1),
                            np.linspace(1, 0, n + 1)])
    b1 = tr.add_phase(spec(), up, np.ones((n, 1)), 0.0, 1.0)
    b2 = tr.add_phase(spec(), down, -np.ones((n, 1)), 1.0, 2.0)
    s1 = [b1.state_index(0, 0), b1.state_index(0, 1)]
    e1 = [b1.state_index(n, 0), b1.state_index(n, 1)]
    s2 = [b2.state_index(0, 0), b2.state_index(0, 1)]
    e2 = [b2.state_index(n, 0), b2.state_index(n, 1)]
    tr.add_equality(lambda x: np.array([x[s1[0]], x[s1[1]],
                                        x[b1.t0_index]]),
                    3, [[s1[0]], [s1[1]], [b1.t0_index]])
    tr.add_equality(lambda x: np.array([x[e2[0]] - 1.0, x[e2[1]]]),
                    2, [[e2[0]], [e2[1]]])
    tr.add_equality(
        lambda x: np.array([x[e1[0]] - x[s2[0]], x[e1[1]] - x[s2[1]],
                            x[b1.tf_index] - x[b2.t0_index]]),
        3, [[e1[0], s2[0]], [e1[1], s2[1]], [b1.tf_index, b2.t0_index]])
    tr.set_objective(lambda x: float(x[b2.tf_index]))
    return tr, b2


def test_minimum_time_double_integrator_two_phase():
    tr, b2 = two_phase_min_time_integrator(10)
    sol = solve(tr.to_nlp(), max_iter=400)
    assert sol.status == "optimal"
    assert sol.feasibility <= 1e-6
    assert sol.x[b2.tf_index] == pytest.approx(2.0, abs=1e-6)
