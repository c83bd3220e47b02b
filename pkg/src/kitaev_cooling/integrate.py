"""Dormand-Prince 5(4) embedded Runge-Kutta integration with PI step control.

Two drivers share one tableau: :func:`dopri5` integrates a scalar ODE with
plain floats, :func:`dopri5_batch` advances many independent scalar ODEs at
once, each with its own step size, accepting or rejecting steps per lane.
"""

from __future__ import annotations

import numpy as np

from .errors import StepSizeUnderflow

__all__ = ["StepSizeUnderflow", "dopri5", "dopri5_batch"]

C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
# B minus the embedded 4th-order weights; the 7th (FSAL) stage weight is -1/40
E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
# PI exponents of Hairer's DOPRI5
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA


def _initial_step(f0, f1_of, y0, t0, span, tol):
    d0 = abs(y0) / tol
    d1 = abs(f0) / tol
    h0 = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6 * span
    h0 = min(h0, span)
    f1 = f1_of(h0)
    d2 = abs(f1 - f0) / tol / h0
    dm = max(d1, d2)
    h1 = (0.01 / dm) ** 0.2 if dm > 1e-15 else max(1e-6 * span, 1e-3 * h0)
    return min(100 * h0, h1, span)


def dopri5(fun, t0: float, y0: float, t1: float, tol: float = 1e-8, t_eval=None, min_step=None, max_step=None, context=""):
    """Integrate scalar ``y' = fun(t, y)`` from ``t0`` to ``t1``.

    The local error estimate of every accepted step is at most ``tol``
    (absolute).  Returns ``(ts, ys)`` at the requested ``t_eval`` points, which
    must lie in ``[t0, t1]``; by default only the endpoint is reported.
    ``max_step`` caps the step size; a few forced steps stop the embedded
    estimate from vanishing by accident over one very long step.
    """
    span = t1 - t0
    if span <= 0:
        raise ValueError("t1 must exceed t0")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if min_step is None:
        min_step = 1e-12 * span
    if max_step is None:
        max_step = span
    marks = [t1] if t_eval is None else sorted(float(t) for t in t_eval)
    out_t, out_y = [], []

    t, y = t0, y0
    k1 = fun(t, y)
    h = _initial_step(k1, lambda hh: fun(t + hh, y + hh * k1), y, t, span, tol)
    err_prev = 1e-4
    mi = 0
    while mi < len(marks) and marks[mi] <= t0:
        out_t.append(marks[mi])
        out_y.append(y)
        mi += 1
    while mi < len(marks):
        target = marks[mi]
        last = False
        h = min(h, max_step)
        h_prop = h
        if t + h >= target:
            h = target - t
            last = True
        k2 = fun(t + C[1] * h, y + h * (A[1][0] * k1))
        k3 = fun(t + C[2] * h, y + h * (A[2][0] * k1 + A[2][1] * k2))
        k4 = fun(t + C[3] * h, y + h * (A[3][0] * k1 + A[3][1] * k2 + A[3][2] * k3))
        k5 = fun(t + C[4] * h, y + h * (A[4][0] * k1 + A[4][1] * k2 + A[4][2] * k3 + A[4][3] * k4))
        k6 = fun(t + h, y + h * (A[5][0] * k1 + A[5][1] * k2 + A[5][2] * k3 + A[5][3] * k4 + A[5][4] * k5))
        y_new = y + h * (B[0] * k1 + B[2] * k3 + B[3] * k4 + B[4] * k5 + B[5] * k6)
        t_new = target if last else t + h
        k7 = fun(t_new, y_new)
        err = abs(h * (E[0] * k1 + E[2] * k3 + E[3] * k4 + E[4] * k5 + E[5] * k6 + E[6] * k7)) / tol
        if err <= 1.0:
            t, y, k1 = t_new, y_new, k7
            fac = SAFETY * max(err, 1e-10) ** -ALPHA * err_prev**BETA
            err_prev = max(err, 1e-4)
            h_next = h * min(FAC_MAX, max(FAC_MIN, fac))
            if last:
                out_t.append(target)
                out_y.append(y)
                mi += 1
                # a step clipped to hit the mark says little about the next one
                h_next = max(h_next, h_prop)
            h = h_next
        else:
            h = h * max(FAC_MIN, SAFETY * err**-ALPHA)
            if h < min_step:
                raise StepSizeUnderflow(t, h, context)
    return np.asarray(out_t), np.asarray(out_y)


def dopri5_batch(fun, t0: float, y0, t1, tol: float = 1e-8, min_step=None, h0=None, max_step=np.inf, max_iter: int = 10_000_000):
    """Advance independent scalar ODEs ``y_i' = fun(t_i, y_i, i)`` to ``t1``.

    ``fun(t, y, idx)`` receives the times, states and lane indices of the
    lanes being stepped and returns their derivatives.  Lanes keep private
    step sizes; the result does not depend on how lanes are grouped.

    Returns ``(y, h)``: final states and the last proposed step per lane, so a
    follow-on call can resume with ``h0=h``.
    """
    y = np.array(y0, dtype=float, copy=True)
    n = y.size
    t1 = np.broadcast_to(np.asarray(t1, dtype=float), (n,)).copy()
    t = np.full(n, float(t0))
    span = t1 - t
    if np.any(span < 0):
        raise ValueError("t1 must not precede t0")
    if min_step is None:
        min_step = 1e-12 * np.maximum(span, np.finfo(float).tiny)
    min_step = np.broadcast_to(np.asarray(min_step, dtype=float), (n,))
    lanes = np.nonzero(span > 0)[0]
    if lanes.size == 0:
        return y, np.zeros(n) if h0 is None else np.asarray(h0, dtype=float)

    k1 = np.zeros(n)
    k1[lanes] = fun(t[lanes], y[lanes], lanes)
    if h0 is None:
        h = np.zeros(n)
        sl = span[lanes]
        d0 = np.abs(y[lanes]) / tol
        d1 = np.abs(k1[lanes]) / tol
        with np.errstate(divide="ignore", invalid="ignore"):
            g0 = np.where((d0 > 1e-5) & (d1 > 1e-5), 0.01 * d0 / d1, 1e-6 * sl)
        g0 = np.minimum(g0, sl)
        f1 = fun(t[lanes] + g0, y[lanes] + g0 * k1[lanes], lanes)
        d2 = np.abs(f1 - k1[lanes]) / tol / g0
        dm = np.maximum(d1, d2)
        with np.errstate(divide="ignore"):
            g1 = np.where(dm > 1e-15, (0.01 / dm) ** 0.2, np.maximum(1e-6 * sl, 1e-3 * g0))
        h[lanes] = np.minimum(np.minimum(100 * g0, g1), sl)
    else:
        h = np.broadcast_to(np.asarray(h0, dtype=float), (n,)).copy()
        h[lanes] = np.where(h[lanes] > 0, h[lanes], 1e-6 * span[lanes])
    err_prev = np.full(n, 1e-4)

    active = lanes
    it = 0
    while active.size:
        it += 1
        if it > max_iter:
            raise RuntimeError("dopri5_batch exceeded max_iter")
        ta, ya, k1a = t[active], y[active], k1[active]
        h_prop = np.minimum(h[active], max_step)
        rem = t1[active] - ta
        last = h_prop >= rem
        ha = np.where(last, rem, h_prop)
        k2 = fun(ta + C[1] * ha, ya + ha * (A[1][0] * k1a), active)
        k3 = fun(ta + C[2] * ha, ya + ha * (A[2][0] * k1a + A[2][1] * k2), active)
        k4 = fun(ta + C[3] * ha, ya + ha * (A[3][0] * k1a + A[3][1] * k2 + A[3][2] * k3), active)
        k5 = fun(ta + C[4] * ha, ya + ha * (A[4][0] * k1a + A[4][1] * k2 + A[4][2] * k3 + A[4][3] * k4), active)
        k6 = fun(
            ta + ha,
            ya + ha * (A[5][0] * k1a + A[5][1] * k2 + A[5][2] * k3 + A[5][3] * k4 + A[5][4] * k5),
            active,
        )
        y_new = ya + ha * (B[0] * k1a + B[2] * k3 + B[3] * k4 + B[4] * k5 + B[5] * k6)
        t_new = np.where(last, t1[active], ta + ha)
        k7 = fun(t_new, y_new, active)
        err = np.abs(ha * (E[0] * k1a + E[2] * k3 + E[3] * k4 + E[4] * k5 + E[5] * k6 + E[6] * k7)) / tol

        ok = err <= 1.0
        acc = active[ok]
        t[acc] = t_new[ok]
        y[acc] = y_new[ok]
        k1[acc] = k7[ok]
        e_ok = np.maximum(err[ok], 1e-10)
        fac = SAFETY * e_ok**-ALPHA * err_prev[acc] ** BETA
        h_next = ha[ok] * np.clip(fac, FAC_MIN, FAC_MAX)
        err_prev[acc] = np.maximum(err[ok], 1e-4)
        done = last[ok]
        h_next = np.where(done, np.maximum(h_next, h_prop[ok]), h_next)
        h[acc] = h_next

        rej = active[~ok]
        h_rej = ha[~ok] * np.maximum(FAC_MIN, SAFETY * err[~ok] ** -ALPHA)
        h[rej] = h_rej
        if np.any(h_rej < min_step[rej]):
            bad = rej[np.argmax(h_rej < min_step[rej])]
            raise StepSizeUnderflow(float(t[bad]), float(h[bad]), f"lane {int(bad)}")

        finished = np.zeros(active.size, dtype=bool)
        finished[np.nonzero(ok)[0][done]] = True
        active = active[~finished]
    return y, h
