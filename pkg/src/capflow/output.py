"""Writers and readers for the files a run produces.

Everything written here is a deterministic function of the config, so two runs
with the same config and seed produce byte-identical files. Wall-clock time is
kept out of these files and goes to a separate ``*.timing.json`` sidecar.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .caps import as_angle
from .grid import capillary_ghost
from .integrals import CSV_COLUMNS, CSV_SCHEMA_VERSION

SUMMARY_SCHEMA_VERSION = 1


class SeriesWriter:
    """Streams :class:`QuermassRecord` rows; values are written with ``repr`` precision."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="", encoding="utf-8")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_COLUMNS)

    def write(self, rec):
        self._w.writerow([repr(float(x)) for x in rec.row()])

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_series(path):
    """Parse a series CSV back into a dict of float arrays keyed by column."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header in {path}: {header}")
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


def run_summary(config, result):
    """JSON-ready summary of a :class:`RunResult` (no timing fields)."""
    from .solver import distance_to_cap, fitted_radius

    theta = config.angle
    h = result.history
    last = h[-1]
    V1_0 = h[0].V1
    r_fit = fitted_radius(result.final, theta)
    r_pred = result.r_predicted
    return {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "theta_degrees": config.theta_degrees,
        "n": config.n,
        "stop_reason": result.reason.value,
        "detail": result.detail,
        "final_t": result.final.t,
        "steps": result.final.step_count,
        "r_predicted": r_pred,
        "r_fitted": r_fit,
        "r_rel_error": abs(r_fit - r_pred) / r_pred,
        "distance_to_cap": distance_to_cap(result.final, theta, r_pred),
        "final_deficit": _finite(last.deficit),
        "final_deficit_norm": _finite(last.deficit_norm),
        "max_V1_drift": max(abs(r.V1 - V1_0) for r in h) / abs(V1_0),
        "max_V2_increase": max((b.V2 - a.V2 for a, b in zip(h, h[1:])), default=0.0) / abs(h[0].V2),
        "final_residual": last.sup_G,
        "final_raw_sup_G": _finite(last.raw_sup_G),
        "final_dilation_rate": last.dilation_rate,
        "monitor_worst": {k: _finite(v) for k, v in result.monitor_worst.items()},
        "violations": [
            {"monitor": v.monitor, "t": v.t, "magnitude": v.magnitude} for v in result.violations
        ],
        "init": None if result.init_report is None else {
            "epsilon_used": result.init_report.epsilon_used,
            "retries_used": result.init_report.retries_used,
            "min_H": result.init_report.min_H,
        },
        "records": len(h),
        # output locations are not part of the experiment, so they stay out
        "config": {k: v for k, v in config.to_dict().items() if k != "output"},
    }


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def mesh_vertices(field, theta, n_xi_export=48):
    """Vertex rows of the surface, pole first, cell centres, then the equator trace.

    Returns ``(pole, rings)`` with ``rings`` of shape ``(rows, sectors, 3)``.
    Axisymmetric profiles are revolved into ``n_xi_export`` sectors.
    """
    theta = as_angle(theta)
    grid = field.grid
    if grid.n != 2:
        raise ValueError("mesh export is only available for n = 2")
    closure = capillary_ghost(field.phi, grid, theta)
    if grid.axisymmetric:
        xi = 2 * np.pi * np.arange(n_xi_export) / n_xi_export
        rho = np.exp(np.append(field.phi, closure.trace))[:, None] * np.ones_like(xi)
    else:
        xi = grid.xi
        rho = np.exp(np.vstack([field.phi, np.atleast_2d(closure.trace)]))
    beta = np.append(grid.beta, np.pi / 2)[:, None]
    rings = np.stack([rho * np.sin(beta) * np.cos(xi), rho * np.sin(beta) * np.sin(xi),
                      rho * np.cos(beta) * np.ones_like(xi)], axis=-1)
    pole = np.array([0.0, 0.0, float(np.mean(rho[0]))])
    return pole, rings


def write_obj(path, field, theta, n_xi_export=48):
    """Triangulated OBJ: pole fan plus quads between rings split into two triangles."""
    pole, rings = mesh_vertices(field, theta, n_xi_export)
    rows, m, _ = rings.shape
    lines = [f"# t = {field.t!r}", "v " + " ".join(repr(float(c)) for c in pole)]
    for ring in rings:
        for p in ring:
            lines.append("v " + " ".join(repr(float(c)) for c in p))

    def vid(i, j):
        return 2 + i * m + (j % m)  # OBJ indices are 1-based, pole is 1

    for j in range(m):
        lines.append(f"f 1 {vid(0, j)} {vid(0, j + 1)}")
    for i in range(rows - 1):
        for j in range(m):
            a, b, c, d = vid(i, j), vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j)
            lines.append(f"f {a} {d} {c}")
            lines.append(f"f {a} {c} {b}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
