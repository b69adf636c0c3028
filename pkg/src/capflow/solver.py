"""Explicit time integration of the capillary inverse-mean-curvature-type flow.

In log-radial form the flow is ``d(phi)/dt = G`` with

    G = n v^2 (1 + cos(theta) <nu, e>) / (n - tr(M A)) - 1,

``tr(M A)`` being the Hessian contraction that appears in the mean curvature,
and the oblique capillary condition imposed through the equator ghost layer.
"""
from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .caps import CapSpec, as_angle, b_theta, cap_radial
from .geometry import graph_terms, snapshot
from .grid import (GHOST_MAX_ITER, GHOST_TOL, GhostClosureError, RadialField, build_grid,
                   capillary_ghost, differentiate)
from .initial import make_initial
from ._kernels import area_2d, axisym_rhs, ghost_2d, rhs_2d
from .conventions import sphere_measure
from .integrals import QuermassRecord, capillary_area, integrate

log = logging.getLogger(__name__)


class MeanConvexityLost(RuntimeError):
    """Raised when ``e^phi v H <= 0`` somewhere on the grid."""


class StopReason(str, enum.Enum):
    CONVERGED = "converged"
    TIME_LIMIT = "time_limit"
    MONITOR_VIOLATION = "monitor_violation"
    MEAN_CONVEXITY_LOST = "mean_convexity_lost"


@dataclass(frozen=True)
class FlowState:
    t: float
    field: RadialField
    last_dt: float = 0.0
    step_count: int = 0


@dataclass(frozen=True)
class Violation:
    monitor: str
    t: float
    magnitude: float  # relative excess over the tolerance band


@dataclass
class Tendency:
    """Right-hand side at one state plus what the stepper needs.

    ``G`` is the pointwise formula, polar-filtered on full grids. ``rate`` is the uniform dilation rate
    removed from it so the semi-discrete system conserves the discrete
    capillary area ``V1`` exactly; it is ``O(dbeta^2)`` and vanishes in the
    continuum limit. The stepped quantity is ``G - rate``.
    """

    G: np.ndarray
    rate: float
    lam: float  # bound on the largest eigenvalue of the linearised operator

    @property
    def dphi(self):
        return self.G - self.rate

    @property
    def residual(self):
        """Stationarity residual ``sup |G - rate|``."""
        return float(np.max(np.abs(self.G - self.rate)))


def _mean_convexity_error(grid, i, value):
    return MeanConvexityLost(
        f"mean convexity lost at cell {tuple(int(k) for k in i)} "
        f"(beta={grid.beta[i[0]]:.5g}, e^phi v H={value:.3e}); the continuous flow "
        "preserves H > 0, so this signals under-resolution: refine n_beta or lower the safety factor"
    )


def _raw_denom(phi, grid, theta):
    st = differentiate(RadialField(grid, phi), theta)
    return graph_terms(phi, st, grid, theta)[3]


def _raw_terms(phi, grid, theta):
    st = differentiate(RadialField(grid, phi), theta)
    v, v2, nu_e, denom = graph_terms(phi, st, grid, theta)
    if not np.all(denom > 0):
        i = np.unravel_index(int(np.argmin(denom)), denom.shape)
        raise _mean_convexity_error(grid, i, float(denom[i]))
    weight = 1 + theta.cos * nu_e
    G = grid.n * v2 * weight / denom - 1
    return G, st, v2, weight, denom


def _evaluate_arrays(phi, grid, theta, conserve=True):
    """Reference array implementation of :func:`_evaluate`."""
    G, st, v2, weight, denom = _raw_terms(phi, grid, theta)
    lam = _lambda_bound(st, v2, weight, denom, grid)
    G = grid.polar_filter(G)
    rate = 0.0
    if conserve:
        gmax = float(np.max(np.abs(G)))
        if gmax > 0:
            s = 1e-6 / gmax
            up = capillary_area(RadialField(grid, phi + s * G), theta)
            dn = capillary_area(RadialField(grid, phi - s * G), theta)
            rate = (up - dn) / (2 * s) / (grid.n * capillary_area(RadialField(grid, phi), theta))
    return Tendency(G, rate, lam)


def _evaluate(phi, grid, theta, conserve=True):
    phi = phi.phi if isinstance(phi, RadialField) else phi
    if not grid.axisymmetric:
        return _evaluate_full(phi, grid, theta, conserve)
    G = np.empty(grid.shape)
    lam, V1, dV1, worst = axisym_rhs(
        phi, grid.dbeta, grid.n, theta.cos, theta.cot, grid.sin_beta, grid.cos_beta,
        grid.cot_beta, grid.weights, sphere_measure(grid.n - 1) / grid.n, G)
    if worst >= 0:
        raise _mean_convexity_error(grid, (worst,), _raw_denom(phi, grid, theta)[worst])
    if not np.all(np.isfinite(G)):
        raise MeanConvexityLost("non-finite right-hand side; the state left the admissible class")
    return Tendency(G, dV1 / (grid.n * V1) if conserve else 0.0, lam)


def _ghost_full(phi, grid, theta):
    ghost, trace, _, it, worst = ghost_2d(phi, grid.dbeta, grid.dxi, theta.cot, 1.0,
                                          GHOST_MAX_ITER, GHOST_TOL)
    if it < 0:
        # let the array implementation produce the diagnostic
        capillary_ghost(phi, grid, theta)
        raise GhostClosureError(f"equator closure did not converge; worst node j={worst}")
    return ghost, trace


def _full_area(phi, grid, theta):
    ghost, trace = _ghost_full(phi, grid, theta)
    return area_2d(phi, ghost, trace, grid.dbeta, grid.dxi, theta.cos, grid.sin_beta[:, 0])


def _evaluate_full(phi, grid, theta, conserve=True):
    """Compiled counterpart of :func:`_evaluate_arrays` for full ``n = 2`` grids."""
    phi = np.ascontiguousarray(phi)
    ghost, _ = _ghost_full(phi, grid, theta)
    G = np.empty(grid.shape)
    lam, worst = rhs_2d(phi, ghost, grid.dbeta, grid.dxi, grid.n, theta.cos, grid.sin_beta[:, 0],
                        grid.cos_beta[:, 0], grid.cot_beta[:, 0], grid.xi_spacing(), G)
    if worst >= 0:
        i = np.unravel_index(worst, grid.shape)
        raise _mean_convexity_error(grid, i, _raw_denom(phi, grid, theta)[i])
    if not np.all(np.isfinite(G)):
        raise MeanConvexityLost("non-finite right-hand side; the state left the admissible class")
    # the stepper only ever sees the polar-filtered tendency, so conserve and
    # measure stationarity on that
    G = grid.polar_filter(G)
    rate = 0.0
    if conserve:
        gmax = float(np.max(np.abs(G)))
        if gmax > 0:
            s = 1e-6 / gmax
            dV = (_full_area(phi + s * G, grid, theta) - _full_area(phi - s * G, grid, theta)) / (2 * s)
            rate = dV / (grid.n * _full_area(phi, grid, theta))
    return Tendency(G, rate, lam)


def _lambda_bound(st, v2, weight, denom, grid):
    # Gershgorin bound for the frozen-coefficient linearisation: the Hessian
    # coefficient n v^2 w M / D^2 times 3-point stencils in beta (plus the
    # cot(beta) first-order term) and in xi at the filtered spacing.
    h = grid.dbeta
    c = grid.n * v2 * weight / denom**2
    m11 = 1 - st.p1**2 / v2
    a = m11 / h**2
    b = st.mult * np.abs(grid.cot_beta) / (2 * h)
    lam = np.maximum(4 * a, 2 * a + 2 * b)
    if not grid.axisymmetric:
        m22 = 1 - st.p2**2 / v2
        lam = lam + 4 * m22 / grid.xi_spacing()[:, None] ** 2
    return float(np.max(c * lam))


def rhs(field: RadialField, theta):
    """Field of ``G`` values; raises :class:`MeanConvexityLost` when ``H <= 0``."""
    return _raw_terms(field.phi, field.grid, as_angle(theta))[0]


def tendency(field: RadialField, theta, conserve=True) -> Tendency:
    """What the stepper integrates: ``G`` minus the V1-conserving dilation rate."""
    return _evaluate(field.phi, field.grid, as_angle(theta), conserve)


def rhs_geometric(field: RadialField, theta):
    """``G`` via ``n (1 + cos(theta) <nu, e>) / (u H) - 1`` (cross-check route)."""
    theta = as_angle(theta)
    s = snapshot(field, theta)
    return field.grid.n * s.capillary_weight / (s.u * s.H) - 1


def stable_dt(field: RadialField, theta, safety=0.9):
    """Largest explicit Heun step inside the parabolic stability limit times ``safety``.

    On interior cells of an axisymmetric grid this is ``safety * dbeta^2 / (2 a)``
    with ``a`` the coefficient of the second ``beta`` derivative in ``G``.
    """
    if not 0 < safety <= 1:
        raise ValueError("safety must lie in (0, 1]")
    lam = _evaluate(field.phi, field.grid, as_angle(theta), conserve=False).lam
    return safety * 2.0 / lam


def _heun(phi, grid, theta, dt, k1: Tendency, conserve=True):
    k2 = _evaluate(phi + dt * k1.dphi, grid, theta, conserve)
    return phi + 0.5 * dt * (k1.dphi + k2.dphi)


def step(state: FlowState, theta, dt, conserve=True) -> FlowState:
    """One explicit trapezoidal (Heun) step; ghosts are re-imposed at each stage."""
    theta = as_angle(theta)
    if dt == 0:
        return state
    grid = state.field.grid
    k1 = _evaluate(state.field.phi, grid, theta, conserve)
    phi = _heun(state.field.phi, grid, theta, dt, k1, conserve)
    t = state.t + dt
    return FlowState(t, RadialField(grid, phi, t), dt, state.step_count + 1)


def predicted_limit_radius(V1_initial, theta, n):
    """Radius of the unique cap carrying the conserved capillary area ``V1``."""
    if not V1_initial > 0:
        raise ValueError("V1 must be positive")
    return (V1_initial / ((n + 1) * b_theta(n, as_angle(theta)))) ** (1.0 / n)


def distance_to_cap(state, theta, r):
    """``max |rho - rho_cap(theta, r)| / r`` over the grid."""
    if not r > 0:
        raise ValueError("reference radius must be positive")
    f = state.field if isinstance(state, FlowState) else state
    grid = f.grid
    ref = cap_radial(CapSpec(as_angle(theta), r, grid.n), grid.beta_field)
    return float(np.max(np.abs(np.exp(f.phi) - ref)) / r)


def fitted_radius(state, theta):
    """Least-squares cap radius (in the quadrature measure) of a radial field."""
    f = state.field if isinstance(state, FlowState) else state
    grid = f.grid
    unit = cap_radial(CapSpec(as_angle(theta), 1.0, grid.n), grid.beta_field)
    w = grid.weights
    return float(np.sum(w * unit * np.exp(f.phi)) / np.sum(w * unit * unit))


class MonitorSuite:
    """Discrete checks of the conservation law and the maximum principles."""

    def __init__(self, policy, first: QuermassRecord):
        self.policy = policy
        self.r0 = first
        self.prev = first
        self.worst = {k: -math.inf for k in self.names()}
        self.violations = []

    @staticmethod
    def names():
        return ("V1_drift", "V2_increase", "min_ubar", "max_H", "min_P",
                "gauge_min", "gauge_max", "G1_min", "G1_max")

    def margins(self, rec: QuermassRecord):
        """Each monitor's excess over its allowed band; positive means violated."""
        p, r0 = self.policy, self.r0
        tm, tc = p.tol_monitor, p.tol_containment
        return {
            "V1_drift": abs(rec.V1 - r0.V1) / abs(r0.V1) - p.tol_V1_drift,
            "V2_increase": (rec.V2 - self.prev.V2) / abs(r0.V2) - p.tol_V2_increase,
            "min_ubar": (r0.min_ubar * (1 - tm) - rec.min_ubar) / abs(r0.min_ubar),
            "max_H": (rec.max_H - r0.max_H * (1 + tm)) / abs(r0.max_H),
            "min_P": (r0.min_P * (1 - tm) - rec.min_P) / abs(r0.min_P),
            "gauge_min": (r0.gauge_min * (1 - tc) - rec.gauge_min) / r0.gauge_min,
            "gauge_max": (rec.gauge_max - r0.gauge_max * (1 + tc)) / r0.gauge_max,
            "G1_min": (r0.min_G1 * (1 - tm) - rec.min_G1) / abs(r0.min_G1),
            "G1_max": (rec.max_G1 - r0.max_G1 * (1 + tm)) / abs(r0.max_G1),
        }

    def check(self, rec: QuermassRecord):
        """Return the violations introduced by ``rec``."""
        found = []
        for name, m in self.margins(rec).items():
            self.worst[name] = max(self.worst[name], m)
            if m > 0:
                v = Violation(name, rec.t, m)
                found.append(v)
                self.violations.append(v)
        self.prev = rec
        return found


@dataclass
class RunResult:
    history: list
    final: FlowState
    reason: StopReason
    detail: str = ""
    violations: list = field(default_factory=list)
    monitor_worst: dict = field(default_factory=dict)
    init_report: object = None
    r_predicted: float = math.nan
    wall_time: float = 0.0


def run(config, on_record=None) -> RunResult:
    """Flow the configured initial data until stationary or ``t_max``.

    ``on_record(index, record, state)`` is called for every emitted record.
    """
    start = time.perf_counter()
    theta = config.angle
    grid = build_grid(config.grid)
    stepping = config.stepping
    field0, report = make_initial(config.init, theta, grid)
    state = FlowState(0.0, field0)

    conserve = stepping.conserve_V1
    k = _evaluate(field0.phi, grid, theta, conserve)
    rec = _record(state, theta, k, 0.0)
    history = [rec]
    monitors = MonitorSuite(config.monitors, rec)
    monitors.check(rec)
    r_pred = predicted_limit_radius(rec.V1, theta, grid.n)
    if on_record:
        on_record(0, rec, state)

    next_record = stepping.record_interval
    reason, detail = None, ""
    recorded_now = True
    while True:
        if k.residual < stepping.tol_stationary:
            reason = StopReason.CONVERGED
            break
        if state.t >= stepping.t_max:
            reason = StopReason.TIME_LIMIT
            break
        if state.step_count >= stepping.max_steps:
            reason, detail = StopReason.TIME_LIMIT, f"max_steps={stepping.max_steps} reached"
            break
        dt = min(stepping.safety * 2.0 / k.lam, stepping.t_max - state.t)
        try:
            phi = _heun(state.field.phi, grid, theta, dt, k, conserve)
            t = state.t + dt
            state = FlowState(t, RadialField(grid, phi, t), dt, state.step_count + 1)
            k = _evaluate(phi, grid, theta, conserve)
        except MeanConvexityLost as exc:
            reason, detail = StopReason.MEAN_CONVEXITY_LOST, str(exc)
            break
        recorded_now = False
        if state.t >= next_record * (1 - 1e-12):
            while next_record <= state.t * (1 + 1e-12):
                next_record += stepping.record_interval
            rec = _record(state, theta, k, dt)
            history.append(rec)
            recorded_now = True
            if on_record:
                on_record(len(history) - 1, rec, state)
            bad = monitors.check(rec)
            if bad:
                msg = "; ".join(f"{b.monitor} exceeded by {b.magnitude:.3e}" for b in bad)
                if config.monitors.action == "abort":
                    reason, detail = StopReason.MONITOR_VIOLATION, f"t={state.t:.6g}: {msg}"
                    break
                log.warning("monitor violation at t=%.6g: %s", state.t, msg)

    if not recorded_now and reason is not StopReason.MEAN_CONVEXITY_LOST:
        rec = _record(state, theta, k, state.last_dt)
        history.append(rec)
        if on_record:
            on_record(len(history) - 1, rec, state)
        bad = monitors.check(rec)
        for b in bad:
            log.warning("monitor violation at t=%.6g: %s exceeded by %.3e", rec.t, b.monitor, b.magnitude)
    log.info("stopped: %s at t=%.6g after %d steps %s", reason.value, state.t, state.step_count, detail)
    return RunResult(
        history=history, final=state, reason=reason, detail=detail,
        violations=list(monitors.violations), monitor_worst=dict(monitors.worst),
        init_report=report, r_predicted=r_pred, wall_time=time.perf_counter() - start,
    )


def _record(state, theta, k: Tendency, dt):
    st = differentiate(state.field, theta)
    snap = snapshot(state.field, theta, st)
    return integrate(state.field, theta, snap=snap, stencil=st, t=state.t, dt=dt,
                     G=k.G, sup_G=k.residual, rate=k.rate)
