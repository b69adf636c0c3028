"""Analytic capillary spherical caps.

``C(theta, r)`` is the part of the sphere of radius ``r`` centred at
``r cos(theta) e`` lying in the closed upper half-space. Caps are the
stationary states of the flow and the equality case of the Minkowski-type
inequality, so the closed forms here serve as oracles for the discrete code.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .conventions import THETA_MIN_DEFAULT, ball_volume, sphere_measure

_QUAD_TOL = 1e-12


class AngleError(ValueError):
    """Contact angle outside the admissible range."""


@dataclass(frozen=True)
class ContactAngle:
    """Contact angle in radians, kept away from the degenerate ends 0 and pi."""

    theta: float
    theta_min: float = THETA_MIN_DEFAULT

    def __post_init__(self):
        t = float(self.theta)
        if not (0.0 < self.theta_min < math.pi / 2):
            raise AngleError(f"theta_min must lie in (0, pi/2), got {self.theta_min!r}")
        if not math.isfinite(t) or t < self.theta_min or t > math.pi - self.theta_min:
            raise AngleError(
                f"contact angle {math.degrees(t):.6g} deg is outside the admissible range "
                f"[{math.degrees(self.theta_min):.6g}, {180 - math.degrees(self.theta_min):.6g}] deg; "
                "caps degenerate near 0 and 180 deg and the grid cannot resolve them"
            )
        object.__setattr__(self, "theta", t)

    @classmethod
    def from_degrees(cls, degrees, theta_min=THETA_MIN_DEFAULT):
        return cls(math.radians(degrees), theta_min)

    @property
    def cos(self):
        return math.cos(self.theta)

    @property
    def sin(self):
        return math.sin(self.theta)

    @property
    def cot(self):
        return math.cos(self.theta) / math.sin(self.theta)

    @property
    def degrees(self):
        return math.degrees(self.theta)


def as_angle(theta) -> ContactAngle:
    """Accept a :class:`ContactAngle` or a float in radians."""
    if isinstance(theta, ContactAngle):
        return theta
    return ContactAngle(float(theta))


@dataclass(frozen=True)
class CapSpec:
    theta: ContactAngle
    r: float = 1.0
    n: int = 2

    def __post_init__(self):
        object.__setattr__(self, "theta", as_angle(self.theta))
        if not (self.r > 0 and math.isfinite(self.r)):
            raise ValueError(f"cap radius must be positive, got {self.r!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"surface dimension must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def center_height(self):
        """``x_{n+1}`` coordinate of the sphere centre, ``-r cos(theta)``."""
        return -self.r * self.theta.cos


@dataclass(frozen=True)
class CapConstants:
    b_theta: float
    area: float
    wetted_area: float
    contact_length: float
    total_H: float
    V1: float
    V2: float


def cap_radial(spec: CapSpec, beta):
    """Radial function of ``C(theta, r)`` at polar angle ``beta`` in ``[0, pi/2]``.

    Positive root of ``|rho X - r cos(theta) e| = r``.
    """
    beta = np.asarray(beta, dtype=float)
    c = spec.theta.cos
    s = spec.theta.sin
    cb = np.cos(beta)
    return spec.r * (-c * cb + np.sqrt(c * c * cb * cb + s * s))


def cap_gauge(point, theta):
    """The unique ``s > 0`` with ``point`` on ``C(theta, s)``.

    ``point`` is an array whose last axis holds Cartesian coordinates with the
    vertical coordinate last. Positively 1-homogeneous.
    """
    theta = as_angle(theta)
    x = np.asarray(point, dtype=float)
    if x.shape[-1] < 2:
        raise ValueError("point needs at least two coordinates")
    if np.any(x[..., -1] < 0):
        raise ValueError("point must lie in the closed upper half-space")
    norm2 = np.sum(x * x, axis=-1)
    if np.any(norm2 == 0):
        raise ValueError("cap gauge is undefined at the origin")
    x_e = -x[..., -1]
    c, s = theta.cos, theta.sin
    return (-c * x_e + np.sqrt(c * c * x_e * x_e + s * s * norm2)) / (s * s)


def radial_gauge(rho, beta, theta):
    """Cap gauge of the graph point ``rho X(beta)``; equals ``rho / cap_radial(theta, 1, beta)``."""
    theta = as_angle(theta)
    c, s = theta.cos, theta.sin
    cb = np.cos(beta)
    return np.asarray(rho) * (c * cb + np.sqrt(c * c * cb * cb + s * s)) / (s * s)


def _quad(func, a, b):
    val, _ = integrate.quad(func, a, b, epsabs=0.0, epsrel=_QUAD_TOL, limit=200)
    return val


def b_theta_closed_form(theta):
    """Volume enclosed by ``C(theta, 1)`` and the plane, for ``n = 2``."""
    c = as_angle(theta).cos
    return math.pi * (1.0 - c) ** 2 * (2.0 + c) / 3.0


@lru_cache(maxsize=256)
def _b_theta_cached(n, theta, method):
    return _b_theta(n, theta, method)


def b_theta(n, theta, method="auto"):
    """Volume of the region bounded by the unit cap ``C(theta, 1)`` and the plane."""
    return _b_theta_cached(int(n), as_angle(theta), method)


def _b_theta(n, theta, method):
    # general n: horizontal slices at height z are n-balls of radius sqrt(1 - (z + cos theta)^2)
    if int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    if method == "closed" or (method == "auto" and n == 2):
        if n != 2:
            raise ValueError("closed form only available for n = 2")
        return b_theta_closed_form(theta)
    c = theta.cos
    wn = ball_volume(n)
    # substitute w = z + cos(theta), w in [cos(theta), 1]
    return wn * _quad(lambda w: (1.0 - w * w) ** (n / 2.0), c, 1.0)


def b_theta_radial(n, theta):
    """``b_theta`` as the volume of a radial graph, ``int rho^(n+1) / (n+1)`` over the half-sphere.

    Independent of the slicing quadrature used by :func:`b_theta`.
    """
    theta = as_angle(theta)
    spec = CapSpec(theta, 1.0, n)
    f = lambda beta: float(cap_radial(spec, beta)) ** (n + 1) * math.sin(beta) ** (n - 1)
    return sphere_measure(n - 1) * _quad(f, 0.0, math.pi / 2) / (n + 1)


def _cap_area_unit(n, theta):
    """Area of ``C(theta, 1)`` via the polar angle about the sphere centre."""
    return sphere_measure(n - 1) * _quad(lambda p: math.sin(p) ** (n - 1), 0.0, theta.theta)


def cap_constants(spec: CapSpec, method="auto") -> CapConstants:
    """Closed-form (``n = 2``) or quadrature (general ``n``) cap integrals."""
    n, r, theta = spec.n, spec.r, spec.theta
    c, s = theta.cos, theta.sin
    if method == "closed" or (method == "auto" and n == 2):
        if n != 2:
            raise ValueError("closed form only available for n = 2")
        b = b_theta_closed_form(theta)
        area = 2 * math.pi * r * r * (1 - c)
        wetted = math.pi * r * r * s * s
        contact = 2 * math.pi * r * s
    else:
        b = b_theta(n, theta, method="quad")
        area = r**n * _cap_area_unit(n, theta)
        wetted = ball_volume(n) * (r * s) ** n
        contact = sphere_measure(n - 1) * (r * s) ** (n - 1)
    total_H = (n / r) * area
    V1 = area - c * wetted
    V2 = (total_H - c * s * contact) / n
    return CapConstants(b, area, wetted, contact, total_H, V1, V2)
