import math

import numpy as np
import pytest

from tripath.corridor import assign_target_edges, astar_corridor
from tripath.dynamics import VehicleLimits
from tripath.errors import BudgetError
from tripath.geometry import Polygon
from tripath.mesh import triangulate_cdt
from tripath.mission import (AircraftPlan, MissionSolution, OrbitSpec,
                             _orbit_count, coordination_report, plan_orbit,
                             plan_transit)
from tripath.seed import funnel_path, inflate_apexes, turning_radius


LIMITS = VehicleLimits(v_min=10.0, v_max=30.0,
                       theta_dot_max=math.radians(45.0),
                       gamma_max=math.radians(10.0), a_max=5.0)


def _straight_setup():
    """Rectangle domain, triangle target whose left edge faces the start."""
    bounds = Polygon(np.array([(0, 0), (130, 0), (130, 30), (0, 30)], float),
                     kind="domain_boundary")
    target = [(110.0, 10.0), (120.0, 15.0), (110.0, 20.0)]
    mesh = triangulate_cdt(target, [(0, 1), (1, 2), (2, 0)], bounds)
    assignments = assign_target_edges(target, 3)
    # the vertical edge: inward normal along +x
    assign = min(assignments, key=lambda a: abs(a.final_heading))
    assert abs(assign.final_heading) < 1e-12
    start = (10.0, 15.0)
    corridor = astar_corridor(mesh, start, assign.edge)
    polyline = funnel_path(mesh, corridor, start, assign.midpoint)
    seed = inflate_apexes(mesh, corridor, polyline,
                          turning_radius(LIMITS.v_max, LIMITS.theta_dot_max))
    return mesh, corridor, seed, assign


def test_straight_transit_minimum_time():
    """100 ft dead ahead at v_max = 30: the optimum is 10/3 seconds."""
    mesh, corridor, seed, assign = _straight_setup()
    assert seed.length == pytest.approx(100.0, abs=1e-9)
    traj = plan_transit(mesh, corridor, seed, LIMITS, 5, assign.midpoint,
                        assign.final_heading)
    assert traj.solution.status == "optimal"
    assert traj.transit_time == pytest.approx(100.0 / 30.0, abs=1e-2)
    # arrival pinned to the target-edge midpoint and assigned heading
    end = traj.sample(traj.t_end)
    assert end["x"][0] == pytest.approx(assign.midpoint[0], abs=1e-5)
    assert end["y"][0] == pytest.approx(assign.midpoint[1], abs=1e-5)
    assert end["theta"][0] == pytest.approx(assign.final_heading, abs=1e-6)
    begin = traj.sample(traj.t_start)
    assert begin["x"][0] == pytest.approx(10.0, abs=1e-6)
    assert begin["v"][0] == pytest.approx(LIMITS.v_max, abs=1e-6)


def test_straight_transit_fixed_duration():
    """Pinned duration comes out exactly; slack absorbed by slowing down."""
    mesh, corridor, seed, assign = _straight_setup()
    tt = 1.5 * seed.length / LIMITS.v_max
    traj = plan_transit(mesh, corridor, seed, LIMITS, 5, assign.midpoint,
                        assign.final_heading, target_time=tt)
    assert traj.solution.status == "optimal"
    assert traj.transit_time == pytest.approx(tt, abs=1e-9)


def _orbit_spec(count, duration):
    r = LIMITS.turn_radius
    return OrbitSpec(center=(0.0, r), radius=r, count=count,
                     duration=duration, entry_point=(0.0, 0.0),
                     entry_heading=0.0, entry_speed=LIMITS.v_max, direction=1)


def test_orbit_minimal_duration_is_coasting():
    """Duration = N * ct_min: the v_max circle needs no acceleration."""
    dur = LIMITS.orbit_time_min
    orbit = plan_orbit(_orbit_spec(1, dur), LIMITS, degree=10)
    assert orbit.solution.status == "optimal"
    assert orbit.j1 <= 1e-6
    assert orbit.max_path_residual() <= 1e-6
    assert orbit.duration == pytest.approx(dur, abs=1e-6)


def test_orbit_stretched_duration():
    dur = 1.2 * LIMITS.orbit_time_min
    orbit = plan_orbit(_orbit_spec(1, dur), LIMITS, degree=6)
    assert orbit.solution.status == "optimal"
    assert orbit.duration == pytest.approx(dur, abs=1e-6)
    assert orbit.max_path_residual() <= 1e-6
    # the orbit starts and ends at the entry point with the entry heading
    first = orbit.sample(orbit.t_start)
    last = orbit.sample(orbit.t_end)
    assert first["x"][0] == pytest.approx(0.0, abs=1e-6)
    assert last["x"][0] == pytest.approx(0.0, abs=1e-5)
    assert last["theta"][0] == pytest.approx(2.0 * math.pi, abs=1e-6)


def test_orbit_duration_window_enforced():
    with pytest.raises(BudgetError):
        plan_orbit(_orbit_spec(1, 0.5 * LIMITS.orbit_time_min), LIMITS)


def test_orbit_count_bands():
    ct_min, ct_max = 8.0, 24.0
    assert _orbit_count(0.0, ct_min, ct_max) == 0
    assert _orbit_count(3.9, ct_min, ct_max) == 0
    assert _orbit_count(4.1, ct_min, ct_max) == 1   # sub-window band
    assert _orbit_count(8.0, ct_min, ct_max) == 1
    assert _orbit_count(20.0, ct_min, ct_max) == 1
    assert _orbit_count(24.0, ct_min, ct_max) == 1
    assert _orbit_count(30.0, ct_min, ct_max) == 2
    assert _orbit_count(50.0, ct_min, ct_max) == 3


def test_orbit_count_gap_raises():
    # ct_max < 2 * ct_min leaves uncovered gaps between windows
    with pytest.raises(BudgetError):
        _orbit_count(12.0, 8.0, 10.0)


def _fake_plan(i, orbit_duration, transit_time):
    return AircraftPlan(index=i, corridor=None, seed=None, seed_time=0.0,
                        orbit=None, transit=None,
                        orbit_duration=orbit_duration,
                        transit_time=transit_time,
                        t_f=orbit_duration + transit_time)


def test_coordination_report_zero_residual():
    plans = [_fake_plan(0, 0.0, 48.72), _fake_plan(1, 16.31, 32.41),
             _fake_plan(2, 26.38, 22.34)]
    sol = MissionSolution(mesh=None, plans=plans, leader=0, t_f_1=48.72,
                          budget=None)
    report = coordination_report(sol)
    assert report["max_j2"] == pytest.approx(0.0, abs=1e-12)
    assert [r["t_f"] for r in report["aircraft"]] == \
        pytest.approx([48.72, 48.72, 48.72])


def test_coordination_report_perturbed():
    plans = [_fake_plan(0, 0.0, 40.0), _fake_plan(1, 10.0, 29.5)]
    sol = MissionSolution(mesh=None, plans=plans, leader=0, t_f_1=40.0,
                          budget=None)
    report = coordination_report(sol)
    assert report["max_j2"] == pytest.approx(0.5, abs=1e-12)
