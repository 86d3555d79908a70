"""Vehicle state models and derivative evaluations.

The Cartesian state is (x, y, theta, theta_dot, v) with controls
(gamma, a): gamma drives the heading-rate derivative and a the speed
derivative.  Inside a mesh phase the position lives in barycentric
coordinates (a1, a2, a3) of the active simplex; the remaining state
components are unchanged.  Angles are radians internally; degrees only
at I/O boundaries.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, MeshError


@dataclass(frozen=True)
class VehicleLimits:
    """State and control bounds (ft, s, rad)."""

    v_min: float = 10.0
    v_max: float = 30.0
    theta_dot_max: float = math.radians(45.0)
    gamma_max: float = math.radians(10.0)
    a_max: float = 5.0  # ft/s^2 (acceleration, not an angular rate)

    def __post_init__(self):
        if not (0.0 < self.v_min < self.v_max):
            raise GeometryError("need 0 < v_min < v_max")
        if min(self.theta_dot_max, self.gamma_max, self.a_max) <= 0.0:
            raise GeometryError("rate limits must be positive")

    @property
    def turn_radius(self):
        """Minimum turning radius at maximum speed."""
        return self.v_max / self.theta_dot_max

    @property
    def orbit_time_min(self):
        """Single fixed-radius orbit period at v_max."""
        return 2.0 * math.pi / self.theta_dot_max

    @property
    def orbit_time_max(self):
        """Single fixed-radius orbit period at v_min."""
        return 2.0 * math.pi * self.turn_radius / self.v_min


def cartesian_derivative(state, control):
    """d/dt of (x, y, theta, theta_dot, v) under (gamma, a).

    Vectorized: state may be (5,) or (n, 5); control (2,) or (n, 2).
    """
    s = np.atleast_2d(np.asarray(state, dtype=float))
    u = np.atleast_2d(np.asarray(control, dtype=float))
    theta = s[:, 2]
    v = s[:, 4]
    out = np.column_stack([v * np.cos(theta), v * np.sin(theta),
                           s[:, 3], u[:, 0], u[:, 1]])
    return out[0] if np.ndim(state) == 1 else out


def barycentric_derivative(transform, state, control):
    """d/dt of (a1, a2, a3, theta, theta_dot, v) in a simplex frame.

    The weight rates follow from the inverse vertex-difference map; their
    sum is zero by construction, so the weight total is conserved along
    any flow.  Vectorized like cartesian_derivative.
    """
    if abs(transform.det) <= 0.0:
        raise MeshError("degenerate simplex transform")
    s = np.atleast_2d(np.asarray(state, dtype=float))
    u = np.atleast_2d(np.asarray(control, dtype=float))
    theta = s[:, 3]
    v = s[:, 5]
    m = transform.matrix  # columns: v1 - v3, v2 - v3
    x1_x3, x2_x3 = m[0, 0], m[0, 1]
    y1_y3, y2_y3 = m[1, 0], m[1, 1]
    ct, st = np.cos(theta), np.sin(theta)
    a1_dot = (y2_y3 * ct - x2_x3 * st) * v / transform.det
    a2_dot = (-y1_y3 * ct + x1_x3 * st) * v / transform.det
    out = np.column_stack([a1_dot, a2_dot, -a1_dot - a2_dot,
                           s[:, 4], u[:, 0], u[:, 1]])
    return out[0] if np.ndim(state) == 1 else out


def orbit_constraint(state, center, r):
    """Circular-orbit path residual (x-xc)^2 + (y-yc)^2 - r^2."""
    s = np.atleast_2d(np.asarray(state, dtype=float))
    res = (s[:, 0] - center[0]) ** 2 + (s[:, 1] - center[1]) ** 2 - r * r
    return float(res[0]) if np.ndim(state) == 1 else res


def phase_time_bound(mesh, t, limits):
    """Upper bound on one phase's duration: longest edge over v_min."""
    edge = mesh.longest_edge(t)
    if mesh.triangle_area(t) <= mesh.area_eps:
        raise MeshError(f"degenerate simplex {t}")
    return edge / limits.v_min


def rk4(f, y0, t_span, n_steps):
    """Fixed-step RK4 integrator; f(y) -> dy/dt, y batched row-wise."""
    y = np.array(y0, dtype=float)
    h = (t_span[1] - t_span[0]) / n_steps
    for _ in range(n_steps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def wrap_angle(theta):
    """Wrap to (-pi, pi]."""
    out = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    return float(out) if np.ndim(theta) == 0 else out
