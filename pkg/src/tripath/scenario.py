"""Scenario file handling.

Scenarios are single JSON documents (schema_version 1).  Units in the
file are feet, seconds, and degrees; everything is converted to radians
internally on load.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import VehicleLimits
from .errors import GeometryError, ScenarioError
from .geometry import Polygon

SCHEMA_VERSION = 1
DEFAULT_DEGREE = 12
DEFAULT_TOLERANCE = 1e-6


@dataclass
class AircraftSpec:
    start: tuple
    heading: float              # radians
    target_edge: int = None     # optional fixed assignment


@dataclass
class SolverSettings:
    degree: int = DEFAULT_DEGREE
    tolerance: float = DEFAULT_TOLERANCE
    max_iter: int = 500


@dataclass
class Scenario:
    name: str
    bounds: Polygon
    keep_outs: list
    target: Polygon
    aircraft: list
    limits: VehicleLimits
    solver: SolverSettings = field(default_factory=SolverSettings)

    @property
    def n_aircraft(self):
        return len(self.aircraft)


def _require(doc, key, kind, where):
    if key not in doc:
        raise ScenarioError(f"missing required field", field=f"{where}.{key}")
    val = doc[key]
    if kind is not None and not isinstance(val, kind):
        raise ScenarioError(f"wrong type for field (expected {kind})",
                            field=f"{where}.{key}")
    return val


def _polygon(raw, kind, where):
    try:
        pts = np.asarray(raw, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError("polygon is not a coordinate list", field=where)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ScenarioError("polygon must be a list of [x, y] pairs",
                            field=where)
    try:
        return Polygon(pts, kind=kind)
    except GeometryError as exc:
        raise ScenarioError(str(exc), field=where)


def load_scenario(path):
    """Parse and validate a scenario file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", field=str(path))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}",
                            field=str(path))
    return scenario_from_dict(doc)


def scenario_from_dict(doc):
    version = _require(doc, "schema_version", int, "scenario")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {version}",
                            field="scenario.schema_version")
    name = doc.get("name", "unnamed")
    domain = _require(doc, "domain", dict, "scenario")
    bounds = _polygon(_require(domain, "bounds", list, "domain"),
                      "domain_boundary", "domain.bounds")
    keep_outs = [
        _polygon(raw, "keep_out", f"keep_out[{i}]")
        for i, raw in enumerate(doc.get("keep_out", []))
    ]
    target = _polygon(_require(doc, "target", list, "scenario"),
                      "target", "target")

    raw_limits = doc.get("limits", {})
    try:
        limits = VehicleLimits(
            v_min=float(raw_limits.get("v_min", 10.0)),
            v_max=float(raw_limits.get("v_max", 30.0)),
            theta_dot_max=math.radians(
                float(raw_limits.get("theta_dot_max_deg", 45.0))),
            gamma_max=math.radians(
                float(raw_limits.get("gamma_max_deg", 10.0))),
            a_max=float(raw_limits.get("a_max", 5.0)))
    except (GeometryError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid vehicle limits: {exc}", field="limits")

    raw_solver = doc.get("solver", {})
    solver = SolverSettings(
        degree=int(raw_solver.get("degree", DEFAULT_DEGREE)),
        tolerance=float(raw_solver.get("tolerance", DEFAULT_TOLERANCE)),
        max_iter=int(raw_solver.get("max_iter", 500)))
    if solver.degree < 1:
        raise ScenarioError("solver degree must be >= 1",
                            field="solver.degree")

    vehicles = _require(doc, "vehicles", list, "scenario")
    if not vehicles:
        raise ScenarioError("at least one vehicle required", field="vehicles")
    aircraft = []
    for i, raw in enumerate(vehicles):
        where = f"vehicles[{i}]"
        start = _require(raw, "start", list, where)
        if len(start) != 2:
            raise ScenarioError("start must be [x, y]", field=f"{where}.start")
        sp = (float(start[0]), float(start[1]))
        heading = math.radians(float(raw.get("heading_deg", 0.0)))
        edge = raw.get("target_edge")
        aircraft.append(AircraftSpec(start=sp, heading=heading,
                                     target_edge=None if edge is None
                                     else int(edge)))

    scenario = Scenario(name=name, bounds=bounds, keep_outs=keep_outs,
                        target=target, aircraft=aircraft, limits=limits,
                        solver=solver)
    _validate(scenario)
    return scenario


def _validate(sc):
    if len(sc.target.vertices) != sc.n_aircraft:
        raise ScenarioError(
            f"target polygon has {len(sc.target.vertices)} sides for "
            f"{sc.n_aircraft} aircraft", field="target")
    edges = {a.target_edge for a in sc.aircraft if a.target_edge is not None}
    for i, a in enumerate(sc.aircraft):
        where = f"vehicles[{i}]"
        if not sc.bounds.contains(a.start):
            raise ScenarioError(f"aircraft {i} starts outside the domain",
                                field=f"{where}.start")
        for j, ko in enumerate(sc.keep_outs):
            if ko.contains(a.start):
                raise ScenarioError(
                    f"aircraft {i} starts inside keep_out[{j}]",
                    field=f"{where}.start")
        if sc.target.contains(a.start):
            raise ScenarioError(
                f"aircraft {i} starts inside the target polygon",
                field=f"{where}.start")
        if a.target_edge is not None and not \
                (0 <= a.target_edge < sc.n_aircraft):
            raise ScenarioError(f"target_edge index out of range",
                                field=f"{where}.target_edge")
    if edges and len(edges) != sum(
            1 for a in sc.aircraft if a.target_edge is not None):
        raise ScenarioError("duplicate target_edge assignments",
                            field="vehicles")


def scenario_to_dict(sc):
    """Canonical dict form (inverse of scenario_from_dict)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "name": sc.name,
        "units": {"length": "feet", "time": "seconds", "angle": "degrees"},
        "domain": {"bounds": [[float(x), float(y)]
                              for x, y in sc.bounds.vertices]},
        "keep_out": [[[float(x), float(y)] for x, y in ko.vertices]
                     for ko in sc.keep_outs],
        "target": [[float(x), float(y)] for x, y in sc.target.vertices],
        "vehicles": [],
        "limits": {
            "v_min": sc.limits.v_min,
            "v_max": sc.limits.v_max,
            "theta_dot_max_deg": math.degrees(sc.limits.theta_dot_max),
            "gamma_max_deg": math.degrees(sc.limits.gamma_max),
            "a_max": sc.limits.a_max,
        },
        "solver": {"degree": sc.solver.degree,
                   "tolerance": sc.solver.tolerance,
                   "max_iter": sc.solver.max_iter},
    }
    for a in sc.aircraft:
        rec = {"start": [float(a.start[0]), float(a.start[1])],
               "heading_deg": math.degrees(a.heading)}
        if a.target_edge is not None:
            rec["target_edge"] = a.target_edge
        doc["vehicles"].append(rec)
    return doc


def save_scenario(sc, path):
    with open(path, "w") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=2)
        fh.write("\n")
