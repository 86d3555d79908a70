"""Result serialization: per-aircraft CSV, overview SVG, summary JSON.

All writers are deterministic: fixed-point number formatting, sorted
keys, LF line endings.  Angles are written in degrees; the internal
radian values are converted here and nowhere else.
"""

import json
import math
import os

import numpy as np

from .mission import coordination_report

SAMPLE_DT = 0.05

CSV_HEADER = ("t,x,y,theta_deg,theta_dot_deg_s,v,"
              "gamma_deg_s2,a,phase,stage")

_PALETTE = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd",
            "#ff7f0e", "#17becf", "#8c564b", "#e377c2"]


def _sample_times(t_f, boundary):
    """Uniform 0.05 s grid over [0, t_f] plus the exact stage boundary."""
    n = int(math.floor(t_f / SAMPLE_DT + 1e-9))
    times = [SAMPLE_DT * k for k in range(n + 1)]
    for extra in ([boundary] if boundary is not None else []) + [t_f]:
        if min(abs(t - extra) for t in times) > 1e-9:
            times.append(extra)
    return np.array(sorted(times))


def plan_records(plan):
    """Full-mission sample rows for one aircraft.

    Returns (times, stage labels, record dict).  The orbit stage covers
    [0, d) and the transit [d, t_f]; the shared boundary instant is
    sampled exactly once, as the first transit row.
    """
    d = plan.orbit_duration
    times = _sample_times(plan.t_f, d if plan.orbit is not None else None)
    in_orbit = (times < d - 1e-9) if plan.orbit is not None \
        else np.zeros(len(times), dtype=bool)
    rec = {key: np.zeros(len(times)) for key in
           ("x", "y", "theta", "theta_dot", "v", "gamma", "a")}
    rec["phase"] = np.zeros(len(times), dtype=int)
    if in_orbit.any():
        orb = plan.orbit.sample(times[in_orbit])
        for key in rec:
            rec[key][in_orbit] = orb[key]
    tr_mask = ~in_orbit
    local = plan.transit.t_start + (times[tr_mask] - d)
    local = np.clip(local, plan.transit.t_start, plan.transit.t_end)
    tra = plan.transit.sample(local)
    for key in rec:
        rec[key][tr_mask] = tra[key]
    stages = np.where(in_orbit, "orbit", "transit")
    return times, stages, rec


def write_trajectory_csv(plan, path):
    """One row per 0.05 s sample; stage boundaries sampled exactly."""
    times, stages, rec = plan_records(plan)
    lines = [CSV_HEADER]
    for k, t in enumerate(times):
        lines.append(
            f"{t:.6f},{rec['x'][k]:.6f},{rec['y'][k]:.6f},"
            f"{math.degrees(rec['theta'][k]):.6f},"
            f"{math.degrees(rec['theta_dot'][k]):.6f},"
            f"{rec['v'][k]:.6f},"
            f"{math.degrees(rec['gamma'][k]):.6f},"
            f"{rec['a'][k]:.6f},{rec['phase'][k]:d},{stages[k]}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_seed_csv(seed, v_max, path, n_samples=None):
    """Geometric seed path sampled at constant speed."""
    from .seed import seed_trajectory
    if n_samples is None:
        n_samples = max(2, int(round(seed.length / (v_max * SAMPLE_DT))) + 1)
    rows = seed_trajectory(seed, v_max, n_samples)
    lines = ["t,x,y,theta_deg,v"]
    for t, x, y, heading, v in rows:
        lines.append(f"{t:.6f},{x:.6f},{y:.6f},"
                     f"{math.degrees(heading):.6f},{v:.6f}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_summary_json(solution, path):
    """Timing and solver statistics per aircraft.

    Wall-clock time is deliberately not recorded so that repeated runs
    of the same scenario produce byte-identical output.
    """
    report = coordination_report(solution)
    for row in report["aircraft"]:
        plan = solution.plans[row["aircraft"]]
        row["transit_iterations"] = plan.transit.solution.iterations
        row["orbit_iterations"] = (plan.orbit.solution.iterations
                                   if plan.orbit else 0)
    with open(path, "w", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

class _Canvas:
    """Maps domain feet to SVG pixels (y axis flipped)."""

    def __init__(self, vertices, width=900.0, margin=20.0):
        lo = vertices.min(axis=0)
        hi = vertices.max(axis=0)
        span = np.maximum(hi - lo, 1e-9)
        self.scale = (width - 2.0 * margin) / span[0]
        self.lo = lo
        self.margin = margin
        self.width = width
        self.height = 2.0 * margin + span[1] * self.scale

    def pt(self, p):
        x = self.margin + (p[0] - self.lo[0]) * self.scale
        y = self.height - self.margin - (p[1] - self.lo[1]) * self.scale
        return f"{x:.3f},{y:.3f}"

    def poly_points(self, pts):
        return " ".join(self.pt(p) for p in pts)


def _mesh_edges(mesh):
    seen = set()
    for tri in mesh.triangles:
        for i in range(3):
            a, b = int(tri[i]), int(tri[(i + 1) % 3])
            key = (min(a, b), max(a, b))
            if key not in seen:
                seen.add(key)
                yield key


def _svg_mesh_groups(mesh, cv, parts):
    parts.append('<g id="mesh" stroke="#c9c9c9" stroke-width="0.6" '
                 'fill="none">')
    for a, b in sorted(_mesh_edges(mesh)):
        pa = cv.pt(mesh.vertices[a]).split(",")
        pb = cv.pt(mesh.vertices[b]).split(",")
        parts.append(f'<line x1="{pa[0]}" y1="{pa[1]}" '
                     f'x2="{pb[0]}" y2="{pb[1]}"/>')
    parts.append("</g>")
    parts.append('<g id="keep-outs" fill="#9a9a9a" fill-opacity="0.65" '
                 'stroke="none">')
    for t in np.flatnonzero(mesh.is_keep_out):
        pts = mesh.vertices[mesh.triangles[t]]
        parts.append(f'<polygon points="{cv.poly_points(pts)}"/>')
    parts.append("</g>")


def write_overview_svg(solution, path):
    """Single drawing: mesh, keep-outs, corridors, one path per aircraft."""
    mesh = solution.mesh
    cv = _Canvas(mesh.vertices)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{cv.width:.0f}" height="{cv.height:.0f}" '
        f'viewBox="0 0 {cv.width:.3f} {cv.height:.3f}">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
    ]
    _svg_mesh_groups(mesh, cv, parts)

    parts.append('<g id="corridors">')
    for plan in solution.plans:
        color = _PALETTE[plan.index % len(_PALETTE)]
        parts.append(f'<g fill="{color}" fill-opacity="0.12" stroke="none">')
        for t in plan.corridor.simplexes:
            pts = mesh.vertices[mesh.triangles[t]]
            parts.append(f'<polygon points="{cv.poly_points(pts)}"/>')
        parts.append("</g>")
    parts.append("</g>")

    parts.append('<g id="paths" fill="none" stroke-width="1.6">')
    for plan in solution.plans:
        color = _PALETTE[plan.index % len(_PALETTE)]
        _, _, rec = plan_records(plan)
        coords = " L ".join(cv.pt((x, y))
                            for x, y in zip(rec["x"], rec["y"]))
        parts.append(f'<path id="aircraft-{plan.index}" stroke="{color}" '
                     f'd="M {coords}"/>')
    parts.append("</g>")

    parts.append('<g id="markers">')
    for plan in solution.plans:
        color = _PALETTE[plan.index % len(_PALETTE)]
        _, _, rec = plan_records(plan)
        start = cv.pt((rec["x"][0], rec["y"][0])).split(",")
        end = cv.pt((rec["x"][-1], rec["y"][-1])).split(",")
        parts.append(f'<circle cx="{start[0]}" cy="{start[1]}" r="4" '
                     f'fill="{color}" stroke="#333333"/>')
        parts.append(f'<rect x="{float(end[0]) - 3:.3f}" '
                     f'y="{float(end[1]) - 3:.3f}" width="6" height="6" '
                     f'fill="{color}" stroke="#333333"/>')
    parts.append("</g>")
    parts.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def write_mesh_svg(mesh, path):
    """Triangulation alone, for the mesh-only workflow."""
    cv = _Canvas(mesh.vertices)
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{cv.width:.0f}" height="{cv.height:.0f}" '
        f'viewBox="0 0 {cv.width:.3f} {cv.height:.3f}">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
    ]
    _svg_mesh_groups(mesh, cv, parts)
    parts.append("</svg>")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def write_mesh_json(mesh, path):
    doc = {
        "vertices": [[float(x), float(y)] for x, y in mesh.vertices],
        "triangles": [[int(v) for v in tri] for tri in mesh.triangles],
        "keep_out": [bool(v) for v in mesh.is_keep_out],
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def export_solution(solution, out_dir, formats=("csv", "svg", "json"),
                    name="mission"):
    """Write the requested artifacts; returns the created file paths."""
    written = []
    formats = set(formats)
    if "csv" in formats:
        for plan in solution.plans:
            p = os.path.join(out_dir, f"{name}_aircraft_{plan.index}.csv")
            write_trajectory_csv(plan, p)
            written.append(p)
    if "svg" in formats:
        p = os.path.join(out_dir, f"{name}.svg")
        write_overview_svg(solution, p)
        written.append(p)
    if "json" in formats:
        p = os.path.join(out_dir, f"{name}_summary.json")
        write_summary_json(solution, p)
        written.append(p)
    return written
