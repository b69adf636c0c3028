"""Cell-centred grids on the closed upper half-sphere and their difference operators.

Neither the pole ``beta = 0`` nor the equator ``beta = pi/2`` is a node. The
pole is closed by reflection symmetry and the equator by a ghost layer that
enforces the capillary boundary condition

    d(phi)/d(beta) = cot(theta) * sqrt(1 + |grad_T phi|^2)    at beta = pi/2,

``grad_T`` being the gradient along the equator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .caps import as_angle
from .conventions import sphere_measure

# Face derivative and face value at beta = pi/2 from the ghost and the three
# nearest interior cells (offsets +1/2, -1/2, -3/2, -5/2 in units of dbeta).
# Derivative is third order, so the ghost value is fourth-order accurate and
# the second difference in the last interior cell stays second order.
_FACE_D = np.array([23.0, -21.0, -3.0, 1.0]) / 24.0
_FACE_V = np.array([5.0, 15.0, -5.0, 1.0]) / 16.0

GHOST_MAX_ITER = 20
GHOST_TOL = 1e-12


class GridError(ValueError):
    pass


class GhostClosureError(RuntimeError):
    """The nonlinear equator closure failed to converge."""


@dataclass(frozen=True)
class GridSpec:
    n: int = 2
    n_beta: int = 128
    n_xi: int = 0
    axisymmetric: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise GridError(f"surface dimension n must be an integer >= 2, got {self.n!r}")
        if int(self.n_beta) != self.n_beta or self.n_beta < 16:
            raise GridError(f"n_beta must be an integer >= 16, got {self.n_beta!r}")
        if not self.axisymmetric:
            if self.n != 2:
                raise GridError("non-axisymmetric grids are only supported for n = 2")
            if int(self.n_xi) != self.n_xi:
                raise GridError(f"n_xi must be an integer, got {self.n_xi!r}")
            if self.n_xi % 2:
                raise GridError(f"n_xi must be even for the pole pairing, got {self.n_xi}")
            if self.n_xi < 8:
                raise GridError(f"n_xi must be >= 8, got {self.n_xi}")


class HalfSphereGrid:
    """Node coordinates with their metric factors and midpoint weights.

    Fields are 1-D arrays of length ``n_beta`` on axisymmetric grids and
    ``(n_beta, n_xi)`` arrays otherwise.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        self.n = spec.n
        self.n_beta = spec.n_beta
        self.axisymmetric = spec.axisymmetric
        self.dbeta = (math.pi / 2) / spec.n_beta
        self.beta = (np.arange(spec.n_beta) + 0.5) * self.dbeta
        if spec.axisymmetric:
            self.n_xi = 0
            self.xi = None
            self.dxi = None
            self.shape = (spec.n_beta,)
            b = self.beta
            self.weights = np.sin(b) ** (spec.n - 1) * self.dbeta * sphere_measure(spec.n - 1)
        else:
            self.n_xi = spec.n_xi
            self.dxi = 2 * math.pi / spec.n_xi
            self.xi = np.arange(spec.n_xi) * self.dxi
            self.shape = (spec.n_beta, spec.n_xi)
            b = self.beta[:, None]
            self.weights = np.broadcast_to(np.sin(b) * self.dbeta * self.dxi, self.shape).copy()
        self.sin_beta = np.sin(b)
        self.cos_beta = np.cos(b)
        self.cot_beta = self.cos_beta / self.sin_beta
        self.weights.setflags(write=False)
        self._filter = None

    def __repr__(self):
        return (f"HalfSphereGrid(n={self.n}, n_beta={self.n_beta}, n_xi={self.n_xi}, "
                f"axisymmetric={self.axisymmetric})")

    @property
    def beta_field(self):
        """``beta`` broadcast to the field shape."""
        if self.axisymmetric:
            return self.beta
        return np.broadcast_to(self.beta[:, None], self.shape)

    def xi_spacing(self):
        """Effective azimuthal spacing per row after polar filtering."""
        if self.axisymmetric:
            return None
        return np.maximum(self.sin_beta[:, 0] * self.dxi, self.dbeta)

    def polar_filter(self, values):
        """Remove azimuthal modes that the explicit step cannot resolve near the pole.

        Row ``i`` keeps the modes whose discrete second-difference eigenvalue in
        the metric-scaled azimuth does not exceed that of the effective spacing
        ``max(sin(beta_i) dxi, dbeta)``. Rows far from the pole are untouched.
        """
        if self.axisymmetric:
            return values
        if self._filter is None:
            m = np.arange(self.n_xi // 2 + 1)
            lam = 4 * np.sin(m * self.dxi / 2) ** 2 / (self.sin_beta[:, 0:1] * self.dxi) ** 2
            cap = 4 / self.xi_spacing()[:, None] ** 2
            keep = lam <= cap * (1 + 1e-12)
            rows = np.nonzero(~keep.all(axis=1))[0]
            self._filter = (rows, keep[rows].astype(float))
        rows, mask = self._filter
        if rows.size == 0:
            return values
        out = np.array(values, dtype=float, copy=True)
        spec = np.fft.rfft(out[rows], axis=1) * mask
        out[rows] = np.fft.irfft(spec, n=self.n_xi, axis=1)
        return out


def build_grid(spec: GridSpec) -> HalfSphereGrid:
    return HalfSphereGrid(spec)


@dataclass(frozen=True)
class RadialField:
    """Log-radial function ``phi = log(rho)`` at the cell centres."""

    grid: HalfSphereGrid
    phi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.shape != self.grid.shape:
            raise GridError(f"field shape {phi.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(phi)):
            raise GridError("radial field contains non-finite values")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def rho(self):
        return np.exp(self.phi)

    def with_phi(self, phi, t=None):
        return RadialField(self.grid, phi, self.t if t is None else t)


@dataclass(frozen=True)
class EquatorClosure:
    """Ghost row beyond ``beta = pi/2`` and the boundary traces it implies."""

    ghost: np.ndarray
    trace: np.ndarray      # phi at beta = pi/2
    slope: np.ndarray      # d(phi)/d(beta) at beta = pi/2
    tangential: np.ndarray  # d(phi)/d(xi) along the equator (zeros if axisymmetric)
    iterations: int = 0

    def residual(self, theta):
        """``|phi_beta - cos(theta) v|`` on the equator."""
        theta = as_angle(theta)
        v = np.sqrt(1 + self.slope**2 + self.tangential**2)
        return np.abs(self.slope - theta.cos * v)


def _azimuthal_derivative(values, dxi):
    return (np.roll(values, -1, axis=-1) - np.roll(values, 1, axis=-1)) / (2 * dxi)


def capillary_ghost(phi, grid: HalfSphereGrid, theta, relax=1.0,
                    max_iter=GHOST_MAX_ITER, tol=GHOST_TOL) -> EquatorClosure:
    """Ghost values that make the equator satisfy the capillary condition exactly."""
    theta = as_angle(theta)
    phi = np.asarray(phi if not isinstance(phi, RadialField) else phi.phi)
    h = grid.dbeta
    cot = theta.cot
    interior = _FACE_D[1] * phi[-1] + _FACE_D[2] * phi[-2] + _FACE_D[3] * phi[-3]
    interior_v = _FACE_V[1] * phi[-1] + _FACE_V[2] * phi[-2] + _FACE_V[3] * phi[-3]

    def ghost_for(slope):
        return (h * slope - interior) / _FACE_D[0]

    if grid.axisymmetric:
        ghost = np.asarray(ghost_for(cot))
        trace = _FACE_V[0] * ghost + interior_v
        return EquatorClosure(ghost, np.asarray(trace), np.asarray(cot), np.asarray(0.0), 0)

    tau = np.zeros(grid.n_xi)
    ghost = ghost_for(cot)
    for it in range(1, max_iter + 1):
        trace = _FACE_V[0] * ghost + interior_v
        tau_new = _azimuthal_derivative(trace, grid.dxi)
        tau = tau + relax * (tau_new - tau)
        ghost = ghost_for(cot * np.sqrt(1 + tau * tau))
        trace = _FACE_V[0] * ghost + interior_v
        tau_chk = _azimuthal_derivative(trace, grid.dxi)
        res = np.abs(cot * np.sqrt(1 + tau_chk**2) - cot * np.sqrt(1 + tau**2))
        if res.max() < tol:
            slope = (_FACE_D[0] * ghost + interior) / h
            return EquatorClosure(ghost, trace, slope, tau_chk, it)
    worst = int(np.argmax(res))
    raise GhostClosureError(
        f"equator closure did not converge in {max_iter} iterations; worst node j={worst} "
        f"(xi={grid.xi[worst]:.6g}) residual {res[worst]:.3e}"
    )


def pad(phi, grid: HalfSphereGrid, closure: EquatorClosure):
    """Return ``phi`` with one pole ghost row in front and the equator ghost row behind."""
    if grid.axisymmetric:
        return np.concatenate([phi[:1], phi, np.atleast_1d(closure.ghost)])
    pole = np.roll(phi[0], -grid.n_xi // 2)
    return np.vstack([pole[None, :], phi, closure.ghost[None, :]])


@dataclass(frozen=True)
class StencilField:
    """Derivatives of ``phi`` in a frame orthonormal for the round metric.

    ``p1, p2`` are gradient components along ``d/dbeta`` and
    ``(1/sin beta) d/dxi``; ``A11, A12, A22`` the covariant Hessian in the same
    frame. On axisymmetric grids ``A22`` is the Hessian eigenvalue shared by the
    ``n - 1`` rotational directions (``mult = n - 1``), and ``p2 = A12 = 0``.
    """

    phi_beta: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    A11: np.ndarray
    A12: np.ndarray
    A22: np.ndarray
    mult: int
    closure: EquatorClosure = field(repr=False)

    @property
    def grad_sq(self):
        return self.p1**2 + self.p2**2

    @property
    def laplacian(self):
        return self.A11 + self.mult * self.A22


def differentiate(field: RadialField, theta, closure: EquatorClosure | None = None) -> StencilField:
    """Central second-order differences with pole symmetry and capillary ghost closure."""
    grid = field.grid
    phi = field.phi
    if closure is None:
        closure = capillary_ghost(phi, grid, theta)
    P = pad(phi, grid, closure)
    h = grid.dbeta
    phi_b = (P[2:] - P[:-2]) / (2 * h)
    phi_bb = (P[2:] - 2 * P[1:-1] + P[:-2]) / (h * h)
    s, cot = grid.sin_beta, grid.cot_beta
    if grid.axisymmetric:
        zero = np.zeros_like(phi)
        return StencilField(phi_b, phi_b, zero, phi_bb, zero, cot * phi_b, grid.n - 1, closure)
    dxi = grid.dxi
    phi_x = _azimuthal_derivative(phi, dxi)
    phi_xx = (np.roll(phi, -1, axis=1) - 2 * phi + np.roll(phi, 1, axis=1)) / (dxi * dxi)
    Px = _azimuthal_derivative(P, dxi)
    phi_bx = (Px[2:] - Px[:-2]) / (2 * h)
    p2 = phi_x / s
    A12 = (phi_bx - cot * phi_x) / s
    A22 = phi_xx / (s * s) + cot * phi_b
    return StencilField(phi_b, phi_b, p2, phi_bb, A12, A22, 1, closure)
