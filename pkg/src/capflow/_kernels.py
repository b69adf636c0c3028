"""Compiled axisymmetric right-hand side.

Same discretisation as :mod:`capflow.grid` / :mod:`capflow.geometry`, fused
into one loop. ``tests/test_solver.py`` checks it against the array code.
"""
import math

import numpy as np
from numba import njit

from .grid import _FACE_D, _FACE_V

D0, D1, D2, D3 = (float(x) for x in _FACE_D)
C0, C1, C2, C3 = (float(x) for x in _FACE_V)


@njit(cache=True)
def axisym_rhs(phi, h, n, cos_t, cot_t, sinb, cosb, cotb, weights, k_wet, G):
    """Fill ``G``; return ``(lam_max, V1, dV1[G], worst_cell)``.

    ``worst_cell`` is -1 unless some cell has ``e^phi v H <= 0``, in which case
    it is the cell with the smallest denominator and ``G`` is left partial.
    """
    N = phi.shape[0]
    P = np.empty(N + 2)
    P[0] = phi[0]
    for i in range(N):
        P[i + 1] = phi[i]
    interior = D1 * phi[N - 1] + D2 * phi[N - 2] + D3 * phi[N - 3]
    P[N + 1] = (h * cot_t - interior) / D0
    trace = C0 * P[N + 1] + C1 * phi[N - 1] + C2 * phi[N - 2] + C3 * phi[N - 3]

    lam = 0.0
    worst = -1
    dmin = np.inf
    inv_h2 = 1.0 / (h * h)
    p = np.empty(N)
    v = np.empty(N)
    area = 0.0
    for i in range(N):
        pi = (P[i + 2] - P[i]) / (2.0 * h)
        a11 = (P[i + 2] - 2.0 * P[i + 1] + P[i]) * inv_h2
        v2 = 1.0 + pi * pi
        vi = math.sqrt(v2)
        denom = n - (a11 / v2 + (n - 1) * cotb[i] * pi)
        if denom < dmin:
            dmin = denom
            if denom <= 0.0:
                worst = i
        w = 1.0 - cos_t * (cosb[i] + sinb[i] * pi) / vi
        G[i] = n * v2 * w / denom - 1.0
        c = n * v2 * w / (denom * denom)
        a = inv_h2 / v2
        b = (n - 1) * abs(cotb[i]) / (2.0 * h)
        li = c * max(4.0 * a, 2.0 * a + 2.0 * b)
        if li > lam:
            lam = li
        p[i] = pi
        v[i] = vi
        area += weights[i] * math.exp(n * phi[i]) * vi
    if worst >= 0:
        return lam, 0.0, 0.0, worst

    rho_e_n = math.exp(n * trace)
    V1 = area - cos_t * k_wet * rho_e_n

    # directional derivative of V1 along G (ghost depends linearly on the interior)
    dg = -(D1 * G[N - 1] + D2 * G[N - 2] + D3 * G[N - 3]) / D0
    dV = 0.0
    for i in range(N):
        gm = G[i - 1] if i > 0 else G[0]
        gp = G[i + 1] if i < N - 1 else dg
        dp = (gp - gm) / (2.0 * h)
        dV += weights[i] * math.exp(n * phi[i]) * (n * v[i] * G[i] + p[i] * dp / v[i])
    dtrace = C0 * dg + C1 * G[N - 1] + C2 * G[N - 2] + C3 * G[N - 3]
    dV -= cos_t * k_wet * n * rho_e_n * dtrace
    return lam, V1, dV, worst


# -- full n = 2 grids ------------------------------------------------------------

@njit(cache=True)
def _ddxi_row(row, dxi, out):
    m = row.shape[0]
    for j in range(m):
        out[j] = (row[(j + 1) % m] - row[(j - 1) % m]) / (2.0 * dxi)


@njit(cache=True)
def ghost_2d(phi, h, dxi, cot_t, relax, max_iter, tol):
    """Equator ghost row by fixed-point iteration on the tangential slope.

    Returns ``(ghost, trace, tau, iterations, worst)``; ``iterations`` is -1 and
    ``worst`` the offending column if the iteration did not converge.
    """
    N, m = phi.shape
    interior = np.empty(m)
    interior_v = np.empty(m)
    for j in range(m):
        interior[j] = D1 * phi[N - 1, j] + D2 * phi[N - 2, j] + D3 * phi[N - 3, j]
        interior_v[j] = C1 * phi[N - 1, j] + C2 * phi[N - 2, j] + C3 * phi[N - 3, j]
    tau = np.zeros(m)
    ghost = np.empty(m)
    trace = np.empty(m)
    tau_new = np.empty(m)
    for j in range(m):
        ghost[j] = (h * cot_t - interior[j]) / D0
    worst = 0
    for it in range(1, max_iter + 1):
        for j in range(m):
            trace[j] = C0 * ghost[j] + interior_v[j]
        _ddxi_row(trace, dxi, tau_new)
        for j in range(m):
            tau[j] = tau[j] + relax * (tau_new[j] - tau[j])
            ghost[j] = (h * cot_t * math.sqrt(1.0 + tau[j] * tau[j]) - interior[j]) / D0
            trace[j] = C0 * ghost[j] + interior_v[j]
        _ddxi_row(trace, dxi, tau_new)
        rmax = -1.0
        for j in range(m):
            r = abs(cot_t * math.sqrt(1.0 + tau_new[j] ** 2) - cot_t * math.sqrt(1.0 + tau[j] ** 2))
            if r > rmax:
                rmax = r
                worst = j
        if rmax < tol:
            return ghost, trace, tau_new, it, -1
    return ghost, trace, tau_new, -1, worst


@njit(cache=True)
def rhs_2d(phi, ghost, h, dxi, n, cos_t, sinb, cosb, cotb, xsp, G):
    """Fill ``G`` on a full grid; return ``(lam_max, worst_flat_index)``."""
    N, m = phi.shape
    half = m // 2
    lam = 0.0
    worst = -1
    dmin = np.inf
    for i in range(N):
        s, c, ct = sinb[i], cosb[i], cotb[i]
        for j in range(m):
            jp = (j + 1) % m
            jm = (j - 1) % m
            if i == 0:
                dn, dnp, dnm = phi[0, (j + half) % m], phi[0, (jp + half) % m], phi[0, (jm + half) % m]
            else:
                dn, dnp, dnm = phi[i - 1, j], phi[i - 1, jp], phi[i - 1, jm]
            if i == N - 1:
                up, upp, upm = ghost[j], ghost[jp], ghost[jm]
            else:
                up, upp, upm = phi[i + 1, j], phi[i + 1, jp], phi[i + 1, jm]
            f0 = phi[i, j]
            pb = (up - dn) / (2.0 * h)
            pbb = (up - 2.0 * f0 + dn) / (h * h)
            px = (phi[i, jp] - phi[i, jm]) / (2.0 * dxi)
            pxx = (phi[i, jp] - 2.0 * f0 + phi[i, jm]) / (dxi * dxi)
            pbx = ((upp - upm) - (dnp - dnm)) / (4.0 * h * dxi)
            p1 = pb
            p2 = px / s
            a11 = pbb
            a12 = (pbx - ct * px) / s
            a22 = pxx / (s * s) + ct * pb
            v2 = 1.0 + p1 * p1 + p2 * p2
            vv = math.sqrt(v2)
            m11 = 1.0 - p1 * p1 / v2
            m12 = -p1 * p2 / v2
            m22 = 1.0 - p2 * p2 / v2
            denom = n - (m11 * a11 + 2.0 * m12 * a12 + m22 * a22)
            if denom < dmin:
                dmin = denom
                if denom <= 0.0:
                    worst = i * m + j
            w = 1.0 - cos_t * (c + s * pb) / vv
            G[i, j] = n * v2 * w / denom - 1.0
            cc = n * v2 * w / (denom * denom)
            a = m11 / (h * h)
            b = abs(ct) / (2.0 * h)
            li = cc * (max(4.0 * a, 2.0 * a + 2.0 * b) + 4.0 * m22 / (xsp[i] * xsp[i]))
            if li > lam:
                lam = li
    return lam, worst


@njit(cache=True)
def area_2d(phi, ghost, trace, h, dxi, cos_t, sinb):
    """Discrete ``V1`` on a full ``n = 2`` grid (midpoint rule, same stencils)."""
    N, m = phi.shape
    half = m // 2
    area = 0.0
    for i in range(N):
        s = sinb[i]
        for j in range(m):
            dn = phi[0, (j + half) % m] if i == 0 else phi[i - 1, j]
            up = ghost[j] if i == N - 1 else phi[i + 1, j]
            pb = (up - dn) / (2.0 * h)
            px = (phi[i, (j + 1) % m] - phi[i, (j - 1) % m]) / (2.0 * dxi) / s
            area += math.exp(2.0 * phi[i, j]) * math.sqrt(1.0 + pb * pb + px * px) * s * h * dxi
    wet = 0.0
    for j in range(m):
        wet += math.exp(2.0 * trace[j])
    return area - cos_t * wet * dxi / 2.0
