"""Pointwise geometry of a radial graph ``rho(X) X`` over the half-sphere."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .caps import as_angle
from .grid import RadialField, StencilField, differentiate


@dataclass(frozen=True)
class GeometrySnapshot:
    """Grid fields derived from one radial field.

    ``shape`` holds the Weingarten map: on full grids the four components
    ``(W11, W12, W21, W22)`` in the round orthonormal frame, on axisymmetric
    grids the principal curvatures ``(k_meridian, k_rotational)``, the latter
    with multiplicity ``n - 1``.
    """

    rho: np.ndarray
    v: np.ndarray
    H: np.ndarray
    nu_e: np.ndarray
    u: np.ndarray
    ubar: np.ndarray
    P: np.ndarray
    shape: tuple
    hsq: np.ndarray
    f: np.ndarray
    denom: np.ndarray  # n - tr(M A) = e^phi v H
    mean_convex: bool
    capillary_weight: np.ndarray  # 1 + cos(theta) <nu, e>


def _contracted_hessian(st: StencilField, v2):
    m11 = 1 - st.p1**2 / v2
    m12 = -st.p1 * st.p2 / v2
    return m11 * st.A11 + 2 * m12 * st.A12 + (st.mult - st.p2**2 / v2) * st.A22


def graph_terms(phi, st: StencilField, grid, theta):
    """``v``, ``<nu, e>`` and the mean-curvature denominator ``e^phi v H``.

    Shared by :func:`snapshot` and the flow right-hand side so both divide by
    the same discrete ``H``.
    """
    v2 = 1 + st.grad_sq
    v = np.sqrt(v2)
    denom = grid.n - _contracted_hessian(st, v2)
    nu_e = -(grid.cos_beta + grid.sin_beta * st.phi_beta) / v
    return v, v2, nu_e, denom


def weingarten(field: RadialField, stencil: StencilField):
    """Weingarten map components and ``|h|^2``; see :class:`GeometrySnapshot`."""
    st = stencil
    rho_v = np.exp(field.phi) * np.sqrt(1 + st.grad_sq)
    v2 = 1 + st.grad_sq
    m11 = 1 - st.p1**2 / v2
    m12 = -st.p1 * st.p2 / v2
    m22 = 1 - st.p2**2 / v2
    if field.grid.axisymmetric:
        k1 = (1 - m11 * st.A11) / rho_v
        k2 = (1 - st.A22) / rho_v
        return (k1, k2), k1**2 + st.mult * k2**2
    W11 = (1 - (m11 * st.A11 + m12 * st.A12)) / rho_v
    W12 = -(m11 * st.A12 + m12 * st.A22) / rho_v
    W21 = -(m12 * st.A11 + m22 * st.A12) / rho_v
    W22 = (1 - (m12 * st.A12 + m22 * st.A22)) / rho_v
    hsq = W11**2 + 2 * W12 * W21 + W22**2
    return (W11, W12, W21, W22), hsq


def weingarten_trace(shape, mult):
    if len(shape) == 2:
        return shape[0] + mult * shape[1]
    return shape[0] + shape[3]


def snapshot(field: RadialField, theta, stencil: StencilField | None = None) -> GeometrySnapshot:
    theta = as_angle(theta)
    if stencil is None:
        stencil = differentiate(field, theta)
    grid = field.grid
    rho = np.exp(field.phi)
    v, v2, nu_e, denom = graph_terms(field.phi, stencil, grid, theta)
    H = denom / (rho * v)
    u = rho / v
    weight = 1 + theta.cos * nu_e
    ubar = u / weight
    with np.errstate(divide="ignore", invalid="ignore"):
        f = grid.n * weight / H - u
    shape, hsq = weingarten(field, stencil)
    return GeometrySnapshot(
        rho=rho, v=v, H=H, nu_e=nu_e, u=u, ubar=ubar, P=ubar * H, shape=shape, hsq=hsq,
        f=f, denom=denom, mean_convex=bool(np.min(H) > 0), capillary_weight=weight,
    )
