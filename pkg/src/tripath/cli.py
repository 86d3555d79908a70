"""Command line entry points.

Exit codes: 0 success, 2 scenario validation error, 3 no corridor
through the mesh, 4 optimization failure.
"""

import argparse
import os
import sys

from .corridor import assign_target_edges, astar_corridor
from .errors import (BudgetError, NoPathError, PlanningError, ScenarioError,
                     SolverError, TripathError)
from .export import (export_solution, write_mesh_json, write_mesh_svg,
                     write_seed_csv)
from .mission import _assign, build_mission_mesh, plan_mission
from .scenario import load_scenario
from .seed import funnel_path, inflate_apexes, turning_radius

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_PATH = 3
EXIT_SOLVER = 4


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tripath",
        description="Triangulated corridor planning for simultaneous "
                    "multi-aircraft arrival.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True,
                       help="scenario JSON file")
        p.add_argument("--out", default=".",
                       help="output directory (created if missing)")
        p.add_argument("--verbose", action="store_true")

    p_plan = sub.add_parser("plan", help="solve the full mission")
    common(p_plan)
    p_plan.add_argument("--degree", type=int, default=None,
                        help="collocation degree override")
    p_plan.add_argument("--tol", type=float, default=None,
                        help="solver tolerance override")
    p_plan.add_argument("--formats", default="csv,svg,json",
                        help="comma list of csv,svg,json")

    p_seed = sub.add_parser("seed",
                            help="emit geometric seed paths only")
    common(p_seed)

    p_mesh = sub.add_parser("mesh", help="emit the triangulation only")
    common(p_mesh)
    return parser


def _load(args):
    scenario = load_scenario(args.scenario)
    if getattr(args, "degree", None) is not None:
        scenario.solver.degree = args.degree
    if getattr(args, "tol", None) is not None:
        scenario.solver.tolerance = args.tol
    os.makedirs(args.out, exist_ok=True)
    return scenario


def _corridors_and_seeds(scenario, mesh):
    assignments = _assign(scenario,
                          assign_target_edges(scenario.target,
                                              scenario.n_aircraft))
    radius = turning_radius(scenario.limits.v_max,
                            scenario.limits.theta_dot_max)
    out = []
    for i, craft in enumerate(scenario.aircraft):
        corr = astar_corridor(mesh, craft.start, assignments[i].edge,
                              aircraft=i)
        polyline = funnel_path(mesh, corr, craft.start,
                               assignments[i].midpoint)
        out.append(inflate_apexes(mesh, corr, polyline, radius))
    return out


def _cmd_plan(args):
    scenario = _load(args)
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    bad = set(formats) - {"csv", "svg", "json"}
    if bad:
        raise ScenarioError(f"unknown formats: {sorted(bad)}",
                            field="--formats")
    solution = plan_mission(scenario, verbose=args.verbose)
    written = export_solution(solution, args.out, formats,
                              name=scenario.name)
    for path in written:
        print(path)
    return EXIT_OK


def _cmd_seed(args):
    scenario = _load(args)
    mesh = build_mission_mesh(scenario)
    seeds = _corridors_and_seeds(scenario, mesh)
    for i, seed in enumerate(seeds):
        path = os.path.join(args.out, f"{scenario.name}_seed_{i}.csv")
        write_seed_csv(seed, scenario.limits.v_max, path)
        print(path)
    return EXIT_OK


def _cmd_mesh(args):
    scenario = _load(args)
    mesh = build_mission_mesh(scenario)
    json_path = os.path.join(args.out, f"{scenario.name}_mesh.json")
    svg_path = os.path.join(args.out, f"{scenario.name}_mesh.svg")
    write_mesh_json(mesh, json_path)
    write_mesh_svg(mesh, svg_path)
    print(json_path)
    print(svg_path)
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {"plan": _cmd_plan, "seed": _cmd_seed, "mesh": _cmd_mesh}
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NoPathError as exc:
        print(f"no corridor: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    except (PlanningError, SolverError, BudgetError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except TripathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
