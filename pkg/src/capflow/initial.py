"""Admissible initial hypersurfaces: exact caps and seeded perturbations of them.

Perturbations are multiplied by a smooth cutoff that vanishes in a collar
around the equator, so the boundary condition is inherited from the exact cap.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_legendre

from .caps import CapSpec, as_angle, cap_radial
from .geometry import snapshot
from .grid import RadialField, differentiate

log = logging.getLogger(__name__)

MAX_MODE = 6
MAX_RETRIES = 8


class InadmissibleInitialData(ValueError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class InitSpec:
    kind: str = "cap"
    r: float = 1.0
    epsilon: float = 0.0
    modes: tuple = ((1, 1.0), (2, 0.5), (3, 1 / 3), (4, 0.25))
    seed: int = 0
    cutoff_delta: float = math.pi / 10
    h_min_factor: float = 0.1

    def __post_init__(self):
        if self.kind not in ("cap", "perturbed_cap"):
            raise ValueError(f"init kind must be 'cap' or 'perturbed_cap', got {self.kind!r}")
        if not (self.r > 0):
            raise ValueError(f"init radius must be positive, got {self.r!r}")
        if not (self.epsilon >= 0):
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not (0 < self.cutoff_delta < math.pi / 4):
            raise ValueError(f"cutoff_delta must lie in (0, pi/4), got {self.cutoff_delta!r}")
        if not (self.h_min_factor > 0):
            raise ValueError("h_min_factor must be positive")
        modes = tuple((int(k), float(w)) for k, w in self.modes)
        for k, _ in modes:
            if not 0 <= k <= MAX_MODE:
                raise ValueError(f"mode frequency {k} outside [0, {MAX_MODE}]")
        object.__setattr__(self, "modes", modes)


@dataclass(frozen=True)
class ValidationReport:
    min_H: float
    min_u: float
    bc_residual: float
    admissible: bool
    h_min: float
    retries_used: int = 0
    epsilon_used: float = 0.0


def collar_cutoff(beta, delta):
    """Smooth function equal to 1 for ``beta <= pi/2 - 2 delta`` and 0 for ``beta >= pi/2 - delta``."""
    x = (np.asarray(beta, dtype=float) - (math.pi / 2 - 2 * delta)) / delta
    x = np.clip(x, 0.0, 1.0)

    def psi(y):
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = np.exp(-1.0 / y[pos])
        return out

    a, b = psi(x), psi(1 - x)
    return 1.0 - a / (a + b)


def perturbation_profile(spec: InitSpec, grid):
    """Seeded mode combination ``Y`` with ``max |Y| = 1`` over the grid.

    Axisymmetric grids use Legendre profiles ``P_k(cos beta)``. Full ``n = 2``
    grids use ``sin(beta)^m cos(m xi - phase)`` (smooth through the pole), with
    ``m = 0`` meaning a Legendre ``P_1`` profile.
    """
    rng = np.random.default_rng(spec.seed)
    Y = np.zeros(grid.shape)
    if grid.axisymmetric:
        for k, w in spec.modes:
            Y += w * rng.standard_normal() * eval_legendre(k, grid.cos_beta)
    else:
        s = grid.sin_beta
        xi = grid.xi[None, :]
        for m, w in spec.modes:
            a = w * rng.standard_normal()
            phase = rng.uniform(0, 2 * math.pi)
            if m == 0:
                Y += a * eval_legendre(1, grid.cos_beta) * np.ones_like(xi)
            else:
                Y += a * s**m * np.cos(m * xi - phase)
        # keep the data inside the subspace the polar-filtered stepper evolves
        Y = grid.polar_filter(Y)
    peak = np.max(np.abs(Y))
    return Y / peak if peak > 0 else Y


def validate(field: RadialField, theta, h_min=None) -> ValidationReport:
    """Check the discrete hypotheses: mean convexity, star-shapedness, boundary condition."""
    theta = as_angle(theta)
    st = differentiate(field, theta)
    snap = snapshot(field, theta, st)
    if h_min is None:
        h_min = 0.1 * field.grid.n / float(np.mean(snap.rho))
    bc = float(np.max(st.closure.residual(theta)))
    min_H = float(snap.H.min())
    min_u = float(snap.u.min())
    ok = bool(min_H >= h_min > 0 and min_u > 0 and bc <= 1e-10 and np.all(np.isfinite(snap.H)))
    return ValidationReport(min_H, min_u, bc, ok, float(h_min))


def make_initial(spec: InitSpec, theta, grid):
    """Build a validated initial field; halve ``epsilon`` on failure up to 8 times."""
    theta = as_angle(theta)
    cap = CapSpec(theta, spec.r, grid.n)
    base = np.log(cap_radial(cap, grid.beta_field))
    h_min = spec.h_min_factor * grid.n / spec.r
    if spec.kind == "cap" or spec.epsilon == 0:
        f = RadialField(grid, base)
        rep = validate(f, theta, h_min)
        if not rep.admissible:
            raise InadmissibleInitialData(f"cap initial data failed validation: {rep}", rep)
        return f, rep
    bump = collar_cutoff(grid.beta_field, spec.cutoff_delta) * perturbation_profile(spec, grid)
    eps = spec.epsilon
    for retry in range(MAX_RETRIES + 1):
        f = RadialField(grid, base + eps * bump)
        rep = validate(f, theta, h_min)
        if rep.admissible:
            rep = ValidationReport(**{**rep.__dict__, "retries_used": retry, "epsilon_used": eps})
            if retry:
                log.info("initial data admissible after %d halvings (epsilon=%g)", retry, eps)
            return f, rep
        eps /= 2
    raise InadmissibleInitialData(
        f"perturbed cap inadmissible after {MAX_RETRIES} halvings of epsilon "
        f"(min_H={rep.min_H:.4g}, h_min={h_min:.4g}, min_u={rep.min_u:.4g})",
        ValidationReport(**{**rep.__dict__, "retries_used": MAX_RETRIES}),
    )
