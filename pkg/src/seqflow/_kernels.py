"""Numba kernels for component-wise flow integration.

Components are independent, so everything here is element-local: batched
kernels carry each (repetition, component) cell through a whole step
interval in registers, and freezing marks cells whose estimate has
converged onto its observation so later intervals skip them.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

_TINY = 1e-300


@nb.njit(cache=True, inline="always")
def _ipow(x, k):
    out = 1.0
    for _ in range(k):
        out *= x
    return out


@nb.njit(cache=True)
def flow_path(lam, b0, D, z, times, eta, use_rk4, freeze_rtol):
    """Integrate one component's (a, b, beta) flow, recording at `times`.

    Returns (a, b, beta, max_rel_drift_a, max_rel_drift_b, ok); drift is
    measured at every record point against the two conserved quantities.
    """
    n = times.size
    a_out = np.empty(n)
    b_out = np.empty(n)
    be_out = np.empty(n)
    a = math.sqrt(lam)
    b = b0
    be = 0.0
    t = 0.0
    drift_a = 0.0
    drift_b = 0.0
    frozen = False
    ok = True
    cap = 10.0 * (abs(z) + 1.0)
    for i in range(n):
        dt = times[i] - t
        if dt > 0.0 and not frozen:
            nst = int(math.ceil(dt / eta))
            h = dt / nst
            for _ in range(nst):
                if use_rk4:
                    bD = _ipow(b, D)
                    th = a * bD * be
                    d1 = z - th
                    k1a = bD * be * d1
                    k1b = D * a * _ipow(b, D - 1) * be * d1 if D > 0 else 0.0
                    k1e = a * bD * d1

                    a2 = a + 0.5 * h * k1a
                    b2 = b + 0.5 * h * k1b
                    e2 = be + 0.5 * h * k1e
                    bD = _ipow(b2, D)
                    d2 = z - a2 * bD * e2
                    k2a = bD * e2 * d2
                    k2b = D * a2 * _ipow(b2, D - 1) * e2 * d2 if D > 0 else 0.0
                    k2e = a2 * bD * d2

                    a3 = a + 0.5 * h * k2a
                    b3 = b + 0.5 * h * k2b
                    e3 = be + 0.5 * h * k2e
                    bD = _ipow(b3, D)
                    d3 = z - a3 * bD * e3
                    k3a = bD * e3 * d3
                    k3b = D * a3 * _ipow(b3, D - 1) * e3 * d3 if D > 0 else 0.0
                    k3e = a3 * bD * d3

                    a4 = a + h * k3a
                    b4 = b + h * k3b
                    e4 = be + h * k3e
                    bD = _ipow(b4, D)
                    d4 = z - a4 * bD * e4
                    k4a = bD * e4 * d4
                    k4b = D * a4 * _ipow(b4, D - 1) * e4 * d4 if D > 0 else 0.0
                    k4e = a4 * bD * d4

                    a += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
                    b += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
                    be += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
                else:
                    bD1 = _ipow(b, D - 1) if D > 0 else 0.0
                    bD = _ipow(b, D)
                    th = a * bD * be
                    d = z - th
                    na = a + h * bD * be * d
                    nbv = b + h * D * a * bD1 * be * d
                    nbe = be + h * a * bD * d
                    a, b, be = na, nbv, nbe
            th = a * _ipow(b, D) * be
            if not (math.isfinite(th) and abs(th) <= cap):
                ok = False
                for k in range(i, n):
                    a_out[k] = a
                    b_out[k] = b
                    be_out[k] = be
                break
            if abs(z - th) <= freeze_rtol * abs(z):
                frozen = True
        t = times[i]
        a_out[i] = a
        b_out[i] = b
        be_out[i] = be
        da = abs(a * a - be * be - lam) / (lam + be * be)
        drift_a = max(drift_a, da)
        if D > 0:
            db = abs(b * b - D * be * be - b0 * b0) / (b0 * b0 + D * be * be)
            drift_b = max(drift_b, db)
    return a_out, b_out, be_out, drift_a, drift_b, ok


# ---------------------------------------------------------------------------
# batched engine kernels
# ---------------------------------------------------------------------------


@nb.njit(cache=True, parallel=True)
def theta_span(theta, frozen, lam, z, span, safety, freeze_rtol):
    """Advance theta' = sqrt(lam^2 + 4 theta^2)(z - theta) by `span`, in place.

    Each cell takes euler steps sized by its own local stiffness
    J = sqrt(lam^2 + 4 th^2) + 2|z - th| so dormant components cross the
    span in a few steps while escaping ones stay resolved.  Once the
    residual is below 1e-3 relative the contraction is tracked with an
    8x coarser step; at `freeze_rtol` relative the cell freezes.
    """
    R, K = theta.shape
    for r in nb.prange(R):
        for k in range(K):
            if frozen[r, k]:
                continue
            th = theta[r, k]
            zz = z[r, k]
            az = abs(zz)
            l2 = lam[k] * lam[k]
            left = span
            while left > 0.0:
                g = math.sqrt(l2 + 4.0 * th * th)
                d = zz - th
                ad = abs(d)
                if ad <= freeze_rtol * az:
                    frozen[r, k] = 1
                    break
                if ad > 1e-3 * az:
                    h = safety / (g + 2.0 * ad)
                else:
                    # near equilibrium only the contraction rate g matters
                    h = 0.5 / g
                if h >= left:
                    h = left
                    left = 0.0
                else:
                    left -= h
                th += h * g * d
            theta[r, k] = th
            if abs(zz - th) <= freeze_rtol * az:
                frozen[r, k] = 1


@nb.njit(cache=True, parallel=True)
def deep_span(a, b, beta, frozen, lam, z, D, span, safety, freeze_rtol):
    """Advance the depth-D flow on (a, b, beta) by `span`, in place.

    Local stiffness combines the squared-gradient bracket (the rate factor
    of theta') with the linear-phase coupling |z - theta| * d(theta)-scale,
    which is what drives escape from the dormant regime.
    """
    R, K = beta.shape
    mD = 3.0 * max(1, D)
    for r in nb.prange(R):
        for k in range(K):
            if frozen[r, k]:
                continue
            av = a[r, k]
            bv = b[r, k]
            be = beta[r, k]
            zz = z[r, k]
            az = abs(zz)
            lj = lam[k]
            left = span
            while left > 0.0:
                bD1 = _ipow(bv, D - 1)
                bD = bD1 * bv
                th = av * bD * be
                d = zz - th
                ad = abs(d)
                if ad <= freeze_rtol * az:
                    frozen[r, k] = 1
                    break
                g1 = bD * be
                g2 = av * bD1 * be
                g3 = av * bD
                bracket = g1 * g1 + D * g2 * g2 + g3 * g3
                if ad > 1e-3 * az:
                    h = safety / (lj + mD * bracket + ad * (2.0 * bD + D * av * bD1))
                else:
                    # contraction phase: rate set by the gradient norm alone
                    h = 0.5 / (lj + max(1, D) * bracket)
                if h >= left:
                    h = left
                    left = 0.0
                else:
                    left -= h
                av += h * g1 * d
                bv += h * D * g2 * d
                be += h * g3 * d
            a[r, k] = av
            b[r, k] = bv
            beta[r, k] = be
            if abs(zz - av * _ipow(bv, D) * be) <= freeze_rtol * az:
                frozen[r, k] = 1


@nb.njit(cache=True, parallel=True)
def theta_span_fixed(theta, frozen, lam, z, h0, span, freeze_rtol):
    """Fixed-step euler variant used when an explicit eta override is set."""
    R, K = theta.shape
    nst = max(1, int(math.ceil(span / h0)))
    h = span / nst
    for r in nb.prange(R):
        for k in range(K):
            if frozen[r, k]:
                continue
            th = theta[r, k]
            zz = z[r, k]
            l2 = lam[k] * lam[k]
            for _ in range(nst):
                d = zz - th
                th += h * math.sqrt(l2 + 4.0 * th * th) * d
            theta[r, k] = th
            if abs(zz - th) <= freeze_rtol * abs(zz):
                frozen[r, k] = 1


@nb.njit(cache=True, parallel=True)
def deep_span_fixed(a, b, beta, frozen, lam, z, D, h0, span, freeze_rtol):
    R, K = beta.shape
    nst = max(1, int(math.ceil(span / h0)))
    h = span / nst
    for r in nb.prange(R):
        for k in range(K):
            if frozen[r, k]:
                continue
            av = a[r, k]
            bv = b[r, k]
            be = beta[r, k]
            zz = z[r, k]
            for _ in range(nst):
                bD1 = _ipow(bv, D - 1)
                bD = bD1 * bv
                d = zz - av * bD * be
                na = av + h * bD * be * d
                nbv = bv + h * D * av * bD1 * be * d
                nbe = be + h * av * bD * d
                av, bv, be = na, nbv, nbe
            a[r, k] = av
            b[r, k] = bv
            beta[r, k] = be
            if abs(zz - av * _ipow(bv, D) * be) <= freeze_rtol * abs(zz):
                frozen[r, k] = 1


@nb.njit(cache=True, parallel=True)
def sq_err_rows(theta, theta_star, out):
    R, K = theta.shape
    for r in nb.prange(R):
        s = 0.0
        for k in range(K):
            d = theta[r, k] - theta_star[k]
            s += d * d
        out[r] = s


@nb.njit(cache=True, parallel=True)
def deep_sq_err_rows(a, b, beta, D, theta_star, out):
    R, K = beta.shape
    for r in nb.prange(R):
        s = 0.0
        for k in range(K):
            d = a[r, k] * _ipow(b[r, k], D) * beta[r, k] - theta_star[k]
            s += d * d
        out[r] = s
