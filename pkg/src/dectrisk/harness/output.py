"""Diagnostic series, field snapshots and legacy-VTK export."""
from __future__ import annotations

import csv
import os

import numpy as np

from ..cochain import export_cochain, pointwise_values, read_cochain_values
from ..swe_core import diagnostics, invariant_rates, tendencies

DIAGNOSTIC_COLUMNS = ("step", "time", "mass", "circulation", "energy", "potential_enstrophy",
                      "dH_dt", "dPE_dt", "min_h", "max_u")


def _fmt(v):
    return str(v) if isinstance(v, (int, np.integer)) else f"{float(v):.17g}"


class DiagnosticsRecorder:
    """Callback for :func:`dectrisk.timestep.run` that collects one row per call."""

    def __init__(self, params, ops, model=None):
        self.params = params
        self.ops = ops
        self.model = model
        self.rows = []

    def __call__(self, step, state):
        d = diagnostics(state, self.params, self.ops)
        tend = self.model(state) if self.model else tendencies(state, self.params, self.ops)
        rates = invariant_rates(state, tend, self.params, self.ops)
        row = {"step": step, "time": state.time, **d, "dH_dt": rates["dH_dt"], "dPE_dt": rates["dPE_dt"]}
        self.rows.append({k: row[k] for k in DIAGNOSTIC_COLUMNS})


def _open_for_write(destination):
    try:
        return open(destination, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {destination}: {exc.strerror}") from exc


def write_diagnostics(series, destination):
    """CSV with the fixed diagnostic header, numbers at 17 significant digits."""
    with _open_for_write(destination) as fh:
        w = csv.writer(fh)
        w.writerow(DIAGNOSTIC_COLUMNS)
        for row in series:
            w.writerow([_fmt(row[k]) for k in DIAGNOSTIC_COLUMNS])


def read_diagnostics(source):
    with open(source, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (int(v) if k == "step" else float(v)) for k, v in r.items()} for r in rows]


def write_snapshot(mesh, state, directory, step):
    """Height and velocity tables for one step; returns the two paths."""
    os.makedirs(directory, exist_ok=True)
    h_path = os.path.join(directory, f"h_{step:06d}.txt")
    u_path = os.path.join(directory, f"u_{step:06d}.txt")
    for c, path, name in [(state.h, h_path, "height"), (state.u, u_path, "velocity")]:
        try:
            export_cochain(mesh, c, path, name)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror}") from exc
    return h_path, u_path


def read_snapshot(path):
    """Raw cochain values from a snapshot table."""
    return read_cochain_values(path)


def write_vtk(mesh, state, destination):
    """Legacy-VTK polydata of the twisted cells with pointwise height as cell data."""
    g = mesh.geometry
    points, cells = [], []
    # each twisted cell is written unwrapped around its straight vertex
    for poly in g.tcell_polygons:
        start = len(points)
        points.extend(poly)
        cells.append(list(range(start, start + len(poly))))
    h = pointwise_values(mesh, state.h)
    lines = ["# vtk DataFile Version 3.0", "twisted-cell height", "ASCII", "DATASET POLYDATA",
             f"POINTS {len(points)} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in points]
    lines.append(f"POLYGONS {len(cells)} {sum(len(c) + 1 for c in cells)}")
    lines += [" ".join(map(str, [len(c), *c])) for c in cells]
    lines += [f"CELL_DATA {len(cells)}", "SCALARS height double 1", "LOOKUP_TABLE default"]
    lines += [f"{v:.17g}" for v in h]
    with _open_for_write(destination) as fh:
        fh.write("\n".join(lines) + "\n")
