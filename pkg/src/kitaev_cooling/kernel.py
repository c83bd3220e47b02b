"""Integrating-factor kernel shared by the exact ramp solver and the continuum formulas.

For a linear cooling ramp the occupation of a mode with energy ``lam`` depends on
temperature only through ``x = T/lam``.  With

    g(x) = int_0^x coth(1/(2t)) dt

and the relaxation strength ``a = 2 gamma J(lam) lam / v`` the occupation at
``x_lo`` of a ramp that started thermalised at ``x_hi`` is

    P = P_th(1/x_lo) + int_{x_lo}^{x_hi} exp(-a [g(x) - g(x_lo)]) D(x) dx,

where ``D(x) = d/dx P_th(1/x) = 1 / (4 x^2 cosh^2(1/(2x)))``.  Every exponent
is non-positive, so nothing overflows.

The integral is evaluated with composite Gauss-Legendre rules on a fixed
panel set.  Below ``x = 1`` the panels are uniform in ``r = 1/x`` (where
``D dx`` becomes ``dr / (4 cosh^2(r/2))``), above it they are uniform in
``ln x``.  Node values of ``g`` and ``D`` are tabulated once; only the two
panels cut by the integration limits are re-evaluated per mode.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli, expit, expn

__all__ = [
    "coth_integral",
    "thermal_derivative",
    "relaxed_occupation",
]

# Dropped regions: x < 1/R_MAX contributes <= exp(-R_MAX); x > exp(U_MAX)
# contributes <= exp(-U_MAX)/4.
R_MAX = 40.0
U_MAX = 37.0
R_WIDTH = 1.0
U_WIDTH = 0.125
N_GAUSS = 8
# table panels are summed in groups of this many
PANEL_BUCKET = 16

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(N_GAUSS)

# Bernoulli expansion of 1/(r^2 (e^r - 1)) for r <= 2, terms j >= 2.
_BERN_J = np.arange(2, 22)
_BERN_COEF = bernoulli(2 * _BERN_J[-1])[2 * _BERN_J] / np.array(
    [math.factorial(2 * j) for j in _BERN_J], dtype=float
)
_EXPN_TERMS = np.arange(1, 22)

# Graded panels, in units of the relaxation length, for modes whose
# boundary layer at x_lo is narrower than the table resolution.  Beyond
# the last edge the integrand is below exp(-LAYER_EDGES[-1]) of its start.
LAYER_EDGES = np.array([0, 0.5, 1, 1.5, 2, 3, 4, 5, 6, 8, 10, 12, 15, 18, 22, 26, 31, 36, 42], dtype=float)


def _tail_large(a):
    # int_a^inf dr / (r^2 (e^r - 1)) = sum_n E_2(n a) / a, for a >= 2
    a = np.asarray(a, dtype=float)
    # E_2 underflows to 0 long before a = 800
    flat = np.minimum(a.ravel(), 800.0)
    # E_2(n a) <= exp(-(n-1) a) E_2(a); terms with (n-1) a > 40 are lost in rounding
    rows, cols = np.nonzero((_EXPN_TERMS[None, :] - 1) * flat[:, None] <= 40.0)
    terms = expn(2, flat[rows] * _EXPN_TERMS[cols])
    total = np.bincount(rows, weights=terms, minlength=flat.size)
    return total.reshape(a.shape) / a


_TAIL_AT_2 = float(_tail_large(2.0))


def _tail_small(a):
    # same integral for 0 < a <= 2, via the Bernoulli series on [a, 2]
    a = np.asarray(a, dtype=float)
    powers = np.power.outer(a, 2 * _BERN_J - 2)
    series = (_BERN_COEF * (2.0 ** (2 * _BERN_J - 2) - powers) / (2 * _BERN_J - 2)).sum(axis=-1)
    return (
        _TAIL_AT_2
        + 0.5 * (1.0 / a**2 - 0.25)
        - 0.5 * (1.0 / a - 0.5)
        + np.log(2.0 / a) / 12.0
        + series
    )


def coth_integral(x):
    """Return ``g(x) = int_0^x coth(1/(2t)) dt`` for ``x >= 0`` (``+inf`` allowed).

    Uses ``g(x) = x + 2 int_{1/x}^inf dr / (r^2 (e^r - 1))`` with an
    exponential-integral series for ``x <= 1/2`` and a Bernoulli series above.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inf = np.isinf(x)
    out[inf] = np.inf
    small = (x > 0) & (x <= 0.5)
    large = (x > 0.5) & ~inf
    if small.any():
        xs = x[small]
        with np.errstate(over="ignore"):
            inv = 1.0 / xs
        out[small] = xs + 2.0 * _tail_large(inv)
    if large.any():
        xl = x[large]
        out[large] = xl + 2.0 * _tail_small(1.0 / xl)
    return out if out.ndim else float(out)


def _coth_half_inv(x):
    # coth(1/(2x)) = 1 + 2/(e^(1/x) - 1), equal to 1 at x = 0
    with np.errstate(over="ignore", divide="ignore"):
        return 1.0 + 2.0 / np.expm1(1.0 / x)


def thermal_derivative(x):
    """``d/dx P_th(1/x)``, positive and bounded by ``exp(-1/x)/x^2``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        c = np.cosh(0.5 / x)
        out = 1.0 / (4.0 * x**2 * c**2)
    return np.where(x > 0, np.nan_to_num(out, nan=0.0, posinf=0.0), 0.0)


class _Panels:
    """Tabulated composite rule: panel bounds in x, nodes, g and measure per node."""

    def __init__(self):
        r_edges = np.arange(1.0, R_MAX + R_WIDTH / 2, R_WIDTH)[::-1]  # x ascending
        u_edges = np.arange(0.0, U_MAX + U_WIDTH / 2, U_WIDTH)
        lo, hi, kind = [], [], []
        for r1, r0 in zip(r_edges[:-1], r_edges[1:]):
            lo.append(1.0 / r1)
            hi.append(1.0 / r0)
            kind.append(0)
        for u0, u1 in zip(u_edges[:-1], u_edges[1:]):
            lo.append(math.exp(u0))
            hi.append(math.exp(u1))
            kind.append(1)
        self.lo = np.array(lo)
        self.hi = np.array(hi)
        self.kind = np.array(kind)
        x, m = _panel_nodes(self.lo[:, None], self.hi[:, None], self.kind[:, None])
        self.x = x  # (panels, N_GAUSS)
        self.m = m
        self.g = coth_integral(x)


def _panel_nodes(lo, hi, kind):
    """Gauss nodes and measures ``D(x) dx`` on [lo, hi] using each panel's variable."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    kind = np.asarray(kind)
    # r-variable (kind 0): r from 1/hi to 1/lo
    with np.errstate(divide="ignore"):
        ra, rb = 1.0 / hi, 1.0 / lo
    ua, ub = np.log(lo, where=lo > 0, out=np.zeros_like(lo)), np.log(hi)
    a = np.where(kind == 0, ra, ua)
    b = np.where(kind == 0, rb, ub)
    half = 0.5 * (b - a)
    t = 0.5 * (a + b)[..., None] + half[..., None] * _GL_NODES
    w = half[..., None] * _GL_WEIGHTS
    k = kind[..., None]
    with np.errstate(over="ignore", divide="ignore"):
        x = np.where(k == 0, 1.0 / t, np.exp(t))
        cr = np.cosh(0.5 * t)
        m_r = w / (4.0 * cr * cr)
    m_u = w * x * thermal_derivative(x)
    m = np.where(k == 0, m_r, m_u)
    return x, np.nan_to_num(m, nan=0.0, posinf=0.0)


@lru_cache(maxsize=1)
def _panels() -> _Panels:
    return _Panels()


def _clip_to_table(v):
    return np.clip(v, 1.0 / R_MAX, math.exp(U_MAX))


def relaxed_occupation(x_lo, x_hi, a, chunk: int = 2048):
    """Occupation ``P(x_lo; x_hi, a)`` of a linearly cooled mode (vectorised).

    Parameters
    ----------
    x_lo : array_like
        Final temperature over mode energy, ``T/lam`` (0 for a ramp to T = 0).
    x_hi : array_like
        Initial temperature over mode energy, ``T_i/lam`` (may be ``inf``).
    a : array_like
        Relaxation strength ``2 gamma J(lam) lam / v``; ``a = 0`` means no bath.

    Returns
    -------
    ndarray
        Occupations, clipped to ``[0, 1/2]``.
    """
    x_lo, x_hi, a = np.broadcast_arrays(
        np.asarray(x_lo, dtype=float), np.asarray(x_hi, dtype=float), np.asarray(a, dtype=float)
    )
    shape = x_lo.shape
    x_lo, x_hi, a = x_lo.ravel(), x_hi.ravel(), a.ravel()
    if np.any(x_lo > x_hi):
        raise ValueError("final temperature exceeds initial temperature")
    with np.errstate(divide="ignore", over="ignore"):
        base = expit(-1.0 / x_lo)

    lo = _clip_to_table(x_lo)
    hi = _clip_to_table(x_hi)
    g_lo = coth_integral(np.minimum(x_lo, hi))
    integral = np.zeros_like(lo)

    # relaxation length at x_lo versus the local table panel width
    with np.errstate(divide="ignore", over="ignore"):
        slope = np.where(x_lo > 0, 1.0 + 2.0 / np.expm1(1.0 / x_lo), 1.0)
        width = 1.0 / (a * slope)
    panel = np.where(lo < 1.0, lo * lo * R_WIDTH, lo * U_WIDTH)
    with np.errstate(over="ignore"):
        narrow = (a > 0) & (6.0 * width <= panel) & (x_hi > x_lo)
    idx = np.nonzero(narrow)[0]
    for start in range(0, idx.size, chunk):
        sel = idx[start : start + chunk]
        integral[sel] = _integrate_layer(x_lo[sel], x_hi[sel], a[sel], width[sel])

    idx = np.nonzero((hi > lo) & ~narrow)[0]
    tab = _panels()
    for start in range(0, idx.size, chunk):
        sel = idx[start : start + chunk]
        integral[sel] = _integrate_block(tab, lo[sel], hi[sel], a[sel], g_lo[sel])

    # the stretch below the table, x < 1/R_MAX; for cold modes it is the whole answer
    cold = ~narrow & (x_lo < 1.0 / R_MAX) & (x_hi > x_lo)
    idx = np.nonzero(cold)[0]
    for start in range(0, idx.size, chunk):
        sel = idx[start : start + chunk]
        integral[sel] += _integrate_cold(x_lo[sel], x_hi[sel], a[sel])
    out = np.clip(base + integral, 0.0, 0.5)
    return out.reshape(shape)


def _integrate_cold(lo, hi, a):
    # Below x = 1/R_MAX, g(x) = x to double precision and D dx = e^-r dr/(1+e^-r)^2
    # with r = 1/x.  Unit panels in r from max(R_MAX, 1/hi) cover 40 e-folds.
    with np.errstate(divide="ignore", over="ignore"):
        r_lo = 1.0 / lo
        r0 = np.minimum(np.maximum(R_MAX, 1.0 / hi), 1e300)
    edges = np.minimum(r0[:, None] + np.arange(0.0, R_MAX + 1.0), r_lo[:, None])
    a_, b_ = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (b_ - a_)
    r = (0.5 * (a_ + b_))[..., None] + half[..., None] * _GL_NODES
    x_lo = np.where(np.isinf(r_lo), 0.0, lo)
    expo = -a[:, None, None] * (1.0 / r - x_lo[:, None, None]) - r
    e = np.exp(-r)
    vals = half[..., None] * _GL_WEIGHTS * np.exp(np.minimum(expo, 0.0)) / (1.0 + e) ** 2
    return vals.sum(axis=(1, 2))


def _integrate_layer(lo, hi, a, width):
    edges = np.minimum(lo[:, None] + width[:, None] * LAYER_EDGES, hi[:, None])
    a_, b_ = edges[:, :-1], edges[:, 1:]
    half = 0.5 * (b_ - a_)
    x = (0.5 * (a_ + b_))[..., None] + half[..., None] * _GL_NODES
    m = half[..., None] * _GL_WEIGHTS * thermal_derivative(x)
    # g(x) - g(lo) integrated directly across the thin layer: whole sub-panels
    # before x, then a Gauss rule on [left edge, x]
    whole = (half[..., None] * _GL_WEIGHTS * _coth_half_inv(x)).sum(axis=-1)
    before = np.cumsum(whole, axis=1) - whole
    part_half = 0.5 * (x - a_[..., None])
    t = (a_[..., None] + part_half)[..., None] + part_half[..., None] * _GL_NODES
    part = (part_half[..., None] * _GL_WEIGHTS * _coth_half_inv(t)).sum(axis=-1)
    expo = -a[:, None, None] * (before[..., None] + part)
    return (m * np.exp(np.minimum(expo, 0.0))).sum(axis=(1, 2))


def _integrate_block(tab: _Panels, lo, hi, a, g_lo):
    # panels entirely inside [lo, hi]
    p_first = np.searchsorted(tab.lo, lo, side="left")  # first panel with start >= lo
    p_last = np.searchsorted(tab.hi, hi, side="right")  # panels [.., p_last) end <= hi
    n_pan = tab.lo.size
    # past g_lo + 750/a every factor exp(-a (g - g_lo)) is exactly zero
    with np.errstate(divide="ignore", over="ignore"):
        g_stop = g_lo + 750.0 / a
    p_end = np.minimum(p_last, np.searchsorted(tab.g.reshape(n_pan, -1)[:, 0], g_stop, side="right"))
    # Each lane sums over a panel range fixed by its own data (rounded out to
    # whole buckets), so its result does not depend on the other lanes.
    c0 = (p_first // PANEL_BUCKET) * PANEL_BUCKET
    c1 = np.minimum(-(-p_end // PANEL_BUCKET) * PANEL_BUCKET, n_pan)
    active = p_end > p_first
    key = c0 * (n_pan + 1) + c1
    total = np.zeros_like(lo)
    for k in np.unique(key[active]):
        sel = np.nonzero(active & (key == k))[0]
        k0, k1 = divmod(int(k), n_pan + 1)
        g = tab.g[k0:k1].ravel()
        m = tab.m[k0:k1].ravel()
        pid = np.repeat(np.arange(k0, k1), N_GAUSS)
        inside = (pid[None, :] >= p_first[sel, None]) & (pid[None, :] < p_end[sel, None])
        expo = -a[sel, None] * (g[None, :] - g_lo[sel, None])
        with np.errstate(invalid="ignore"):
            vals = np.where(inside, m[None, :] * np.exp(np.minimum(expo, 0.0)), 0.0)
        total[sel] = vals.sum(axis=1)

    # the (at most two) panels cut by lo or hi
    cut_lo = np.clip(p_first - 1, 0, n_pan - 1)
    cut_hi = np.clip(p_last, 0, n_pan - 1)
    for cut, is_hi in ((cut_lo, False), (cut_hi, True)):
        plo = np.maximum(tab.lo[cut], lo)
        phi = np.minimum(tab.hi[cut], hi)
        valid = phi > plo
        valid &= (p_last < n_pan) if is_hi else (p_first > 0)
        if is_hi:
            # skip when the hi cut is the same panel already handled as the lo cut
            valid &= ~((cut == cut_lo) & (tab.lo[cut_lo] < lo))
        if not valid.any():
            continue
        x, m = _panel_nodes(plo[valid], phi[valid], tab.kind[cut[valid]])
        gx = coth_integral(x)
        expo = -a[valid, None] * (gx - g_lo[valid, None])
        with np.errstate(invalid="ignore"):
            part = (m * np.exp(np.minimum(expo, 0.0))).sum(axis=1)
        total[valid] += part
    return total
