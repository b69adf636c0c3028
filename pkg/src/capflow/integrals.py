"""Global quantities of a discrete capillary graph and the Minkowski deficit."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .caps import as_angle, b_theta, radial_gauge
from .conventions import sphere_measure
from .geometry import GeometrySnapshot, snapshot
from .grid import RadialField, differentiate

#: CSV column order for time series; bump CSV_SCHEMA_VERSION on any change.
CSV_COLUMNS = (
    "t", "dt", "V1", "V2", "area", "wetted_area", "contact_length", "total_H",
    "deficit", "deficit_norm", "min_ubar", "max_H", "min_P", "gauge_min", "gauge_max", "sup_G",
)
CSV_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class QuermassRecord:
    t: float
    dt: float
    V1: float
    V2: float
    area: float
    wetted_area: float
    contact_length: float
    total_H: float
    deficit: float
    deficit_norm: float
    min_ubar: float
    max_H: float
    min_P: float
    gauge_min: float
    gauge_max: float
    sup_G: float
    # monitor-only extras, not part of the CSV row
    min_H: float = float("nan")
    min_G1: float = float("nan")
    max_G1: float = float("nan")
    raw_sup_G: float = float("nan")
    dilation_rate: float = 0.0

    def row(self):
        return [getattr(self, c) for c in CSV_COLUMNS]

    def as_dict(self):
        return asdict(self)


assert tuple(f.name for f in fields(QuermassRecord))[: len(CSV_COLUMNS)] == CSV_COLUMNS


def minkowski_deficit(total_H, V1, contact_length, theta, n):
    """Raw and ``total_H``-normalised deficit of the capillary Minkowski inequality.

    ``total_H - n (n+1)^(1/n) b^(1/n) V1^((n-1)/n) - sin(theta) cos(theta) |dS|``,
    zero on caps and nonnegative on star-shaped mean-convex capillary surfaces.
    """
    theta = as_angle(theta)
    if not V1 > 0:
        raise ValueError(f"Minkowski deficit needs V1 > 0, got {V1!r}")
    b = b_theta(n, theta)
    d = (total_H - n * ((n + 1) * b) ** (1.0 / n) * V1 ** ((n - 1.0) / n)
         - theta.sin * theta.cos * contact_length)
    return d, d / total_H


def boundary_measures(field: RadialField, closure):
    """``(wetted_area, contact_length)`` from the equator trace of the ghost closure."""
    grid = field.grid
    n = grid.n
    rho_e = np.exp(closure.trace)
    if grid.axisymmetric:
        rho_e = float(rho_e)
        return sphere_measure(n - 1) * rho_e**n / n, sphere_measure(n - 1) * rho_e ** (n - 1)
    wetted = np.sum(rho_e**2) * grid.dxi / 2
    rho_xi = rho_e * closure.tangential
    contact = np.sum(np.sqrt(rho_e**2 + rho_xi**2)) * grid.dxi
    return float(wetted), float(contact)


def capillary_area(field: RadialField, theta, stencil=None):
    """Discrete ``V1 = |S| - cos(theta) |wetted|`` (first derivatives only)."""
    theta = as_angle(theta)
    if stencil is None:
        stencil = differentiate(field, theta)
    v = np.sqrt(1 + stencil.grad_sq)
    area = float(np.sum(np.exp(field.grid.n * field.phi) * v * field.grid.weights))
    wetted, _ = boundary_measures(field, stencil.closure)
    return area - theta.cos * wetted


def integrate(field: RadialField, theta, snap: GeometrySnapshot | None = None,
              stencil=None, t=None, dt=0.0, G=None, sup_G=None, rate=0.0) -> QuermassRecord:
    """Midpoint quadrature of the extensive quantities plus monitor extrema."""
    theta = as_angle(theta)
    grid = field.grid
    n = grid.n
    if stencil is None:
        stencil = differentiate(field, theta)
    if snap is None:
        snap = snapshot(field, theta, stencil)
    dA = np.exp(n * field.phi) * snap.v * grid.weights
    area = float(np.sum(dA))
    total_H = float(np.sum(snap.H * dA))
    wetted, contact = boundary_measures(field, stencil.closure)
    V1 = area - theta.cos * wetted
    V2 = (total_H - theta.cos * theta.sin * contact) / n
    deficit, deficit_norm = minkowski_deficit(total_H, V1, contact, theta, n) if V1 > 0 else (math.nan, math.nan)
    gauge = radial_gauge(snap.rho, grid.beta_field, theta)
    if G is None:
        with np.errstate(divide="ignore"):
            G = n * snap.v**2 * snap.capillary_weight / snap.denom - 1
    return QuermassRecord(
        t=float(field.t if t is None else t), dt=float(dt), V1=V1, V2=V2, area=area,
        wetted_area=wetted, contact_length=contact, total_H=total_H,
        deficit=float(deficit), deficit_norm=float(deficit_norm),
        min_ubar=float(snap.ubar.min()), max_H=float(snap.H.max()), min_P=float(snap.P.min()),
        gauge_min=float(gauge.min()), gauge_max=float(gauge.max()),
        sup_G=float(np.abs(G - rate).max()) if sup_G is None else float(sup_G),
        min_H=float(snap.H.min()), min_G1=float((G + 1).min()), max_G1=float((G + 1).max()),
        raw_sup_G=float(np.abs(G).max()), dilation_rate=float(rate),
    )
