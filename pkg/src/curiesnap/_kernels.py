"""Compiled inner loops of the hybrid integrator.

Only the fixed-step RK4 advance in each contact mode lives here; event
localisation and mode switching stay in :mod:`curiesnap.engine`.
"""
import math

import numpy as np
from numba import njit

STATUS_END = 0
STATUS_CROSS = 1
STATUS_RELEASE = 2
STATUS_NONFINITE = 3

PROFILE_CODES = {"triangle": 0, "sine": 1, "table": 2}


@njit(cache=True, nogil=True)
def temp_at(t, kind, prof, tab_t, tab_v):
    # prof = (t_min, t_max, rate, period, phase)
    if kind == 2:
        return np.interp(t, tab_t, tab_v)
    p = prof[3]
    tau = (t + prof[4]) % p
    if kind == 0:
        if tau < 0.5 * p:
            out = prof[0] + prof[2] * tau
        else:
            out = prof[1] - prof[2] * (tau - 0.5 * p)
    else:
        out = prof[0] + 0.5 * (prof[1] - prof[0]) * (1.0 - math.cos(2.0 * math.pi * tau / p))
    return min(max(out, prof[0]), prof[1])


@njit(cache=True, nogil=True)
def _locate(grid, q):
    n = grid.shape[0]
    if q <= grid[0]:
        return 0, 0.0
    if q >= grid[n - 1]:
        return n - 2, 1.0
    i = np.searchsorted(grid, q, side="right") - 1
    if i > n - 2:
        i = n - 2
    return i, (q - grid[i]) / (grid[i + 1] - grid[i])


@njit(cache=True, nogil=True)
def table_force(xg, tg, vals, x, temp):
    """Bilinear table lookup; queries are saturated at the hull (RK4 stages may peek past the stop)."""
    i, wx = _locate(xg, x)
    j, wt = _locate(tg, temp)
    lo = (1.0 - wx) * vals[j, i] + wx * vals[j, i + 1]
    if wt == 0.0:
        return lo
    hi = (1.0 - wx) * vals[j + 1, i] + wx * vals[j + 1, i + 1]
    return (1.0 - wt) * lo + wt * hi


@njit(cache=True, nogil=True)
def rk4_free(t, h, x, xd, v, f0, lp, xg, tg, vals, kind, prof, tab_t, tab_v):
    """One RK4 step of the free-flight equations; ``f0`` is the magnetic force at (x, t).

    lp = (m_eff, k, c, theta, c_p, 1/R).  Also returns the step's magnetic
    work, damping loss and harvested energy, integrated with the same stage
    weights so the ledger is as accurate as the state.
    """
    m, k, c, th, cp, g = lp[0], lp[1], lp[2], lp[3], lp[4], lp[5]
    a1 = xd
    b1 = (f0 - k * x - c * xd - th * v) / m
    c1 = (th * xd - g * v) / cp

    tm = t + 0.5 * h
    Tm = temp_at(tm, kind, prof, tab_t, tab_v)
    x2 = x + 0.5 * h * a1
    xd2 = xd + 0.5 * h * b1
    v2 = v + 0.5 * h * c1
    f2 = table_force(xg, tg, vals, x2, Tm)
    a2 = xd2
    b2 = (f2 - k * x2 - c * xd2 - th * v2) / m
    c2 = (th * xd2 - g * v2) / cp

    x3 = x + 0.5 * h * a2
    xd3 = xd + 0.5 * h * b2
    v3 = v + 0.5 * h * c2
    f3 = table_force(xg, tg, vals, x3, Tm)
    a3 = xd3
    b3 = (f3 - k * x3 - c * xd3 - th * v3) / m
    c3 = (th * xd3 - g * v3) / cp

    T4 = temp_at(t + h, kind, prof, tab_t, tab_v)
    x4 = x + h * a3
    xd4 = xd + h * b3
    v4 = v + h * c3
    f4 = table_force(xg, tg, vals, x4, T4)
    a4 = xd4
    b4 = (f4 - k * x4 - c * xd4 - th * v4) / m
    c4 = (th * xd4 - g * v4) / cp

    w = h / 6.0
    return (
        x + w * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
        xd + w * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
        v + w * (c1 + 2.0 * c2 + 2.0 * c3 + c4),
        w * (f0 * xd + 2.0 * f2 * xd2 + 2.0 * f3 * xd3 + f4 * xd4),
        w * c * (xd * xd + 2.0 * xd2 * xd2 + 2.0 * xd3 * xd3 + xd4 * xd4),
        w * g * (v * v + 2.0 * v2 * v2 + 2.0 * v3 * v3 + v4 * v4),
    )


@njit(cache=True, nogil=True)
def _record(buf, count, t, temp, x, xd, v, mode):
    buf[count, 0] = t
    buf[count, 1] = temp
    buf[count, 2] = x
    buf[count, 3] = xd
    buf[count, 4] = v
    buf[count, 5] = mode
    return count + 1


@njit(cache=True, nogil=True)
def advance_free(n, n_end, t0, dt, x, xd, v, lp, xc, xg, tg, vals, kind, prof, tab_t, tab_v,
                 every, buf, count, ledger):
    """Integrate free flight from step ``n`` until a stop is crossed or ``n_end`` is reached.

    Returns (status, n, x, xd, v, count).  On STATUS_CROSS the returned state
    is the last one inside the stops, at step ``n``.  ledger = (W, damped, harvested).
    """
    t = t0 + n * dt
    f = table_force(xg, tg, vals, x, temp_at(t, kind, prof, tab_t, tab_v))
    while n < n_end:
        x1, xd1, v1, dw, dd, dh = rk4_free(t, dt, x, xd, v, f, lp, xg, tg, vals, kind, prof, tab_t, tab_v)
        if not (math.isfinite(x1) and math.isfinite(xd1) and math.isfinite(v1)):
            return STATUS_NONFINITE, n, x, xd, v, count
        if abs(x1) > xc:
            return STATUS_CROSS, n, x, xd, v, count
        t1 = t0 + (n + 1) * dt
        T1 = temp_at(t1, kind, prof, tab_t, tab_v)
        f1 = table_force(xg, tg, vals, x1, T1)
        ledger[0] += dw
        ledger[1] += dd
        ledger[2] += dh
        x, xd, v, f, t = x1, xd1, v1, f1, t1
        n += 1
        if n % every == 0:
            count = _record(buf, count, t, T1, x, xd, v, 0.0)
    return STATUS_END, n, x, xd, v, count


@njit(cache=True, nogil=True)
def advance_stuck(n, n_end, t0, dt, side, v, lp, xc, coupling, xg, tg, vals, kind, prof, tab_t, tab_v,
                  every, buf, count, ledger):
    """Hold the tip on a stop; only the voltage relaxes.  Stops at the first step where the hold fails.

    Returns (status, n, v, count) with the state at step ``n``.
    """
    k, th, cp, g = lp[1], lp[3], lp[4], lp[5]
    if not coupling:
        th = 0.0
    decay = math.exp(-dt * g / cp)
    mode = 1.0 if side > 0 else 2.0
    while n < n_end:
        v1 = v * decay
        ledger[2] += 0.5 * cp * (v * v - v1 * v1)
        v = v1
        n += 1
        t = t0 + n * dt
        T = temp_at(t, kind, prof, tab_t, tab_v)
        if n % every == 0:
            count = _record(buf, count, t, T, side * xc, 0.0, v, mode)
        hold = side * (table_force(xg, tg, vals, side * xc, T) - th * v) - k * xc
        if hold < 0.0:
            return STATUS_RELEASE, n, v, count
    return STATUS_END, n, v, count
