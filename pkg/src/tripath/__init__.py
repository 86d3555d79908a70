"""Coordinated simultaneous-arrival trajectory planning through
triangulated corridors: constrained Delaunay meshing, A* simplex
corridors, funnel/Dubins seeding, and phased barycentric optimal
control over an in-house SQP solver.
"""

from .errors import (BudgetError, GeometryError, InfeasibleSeedError,
                     MeshError, NoPathError, PlanningError,
                     PointLocationError, ScenarioError, SolverError,
                     TripathError)
from .corridor import Corridor, assign_target_edges, astar_corridor
from .dynamics import VehicleLimits
from .export import export_solution
from .geometry import Polygon
from .mesh import (TriMesh, from_barycentric, locate, prune_keep_out,
                   to_barycentric, triangulate_cdt)
from .mission import (MissionSolution, build_mission_mesh,
                      coordination_report, plan_mission, plan_orbit,
                      plan_transit)
from .scenario import Scenario, load_scenario, save_scenario
from .seed import funnel_path, inflate_apexes, seed_times, turning_radius

__version__ = "0.1.0"
