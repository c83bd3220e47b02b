"""Data collapse, collapse quality and asymptote fits for sweep records.

Two rescalings are supported:

* ``Ti`` collapse, one family per ``v/gamma``::

      X = (gamma/v)^(1/(s+1)) T_i,    Y = (gamma/v)^(1/(z(s+1))) E

* ``v`` collapse, one family per ``T_i``::

      X = (v/gamma) T_i^-(s+1),       Y = T_i^(-1/z) E

Both only relabel axes; ``E`` values are never modified.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "SweepRecord",
    "Family",
    "CollapseDataset",
    "AsymptoteFit",
    "rescale_families",
    "rescale_Ti_collapse",
    "rescale_v_collapse",
    "collapse_quality",
    "fit_asymptote",
    "fit_power_law",
    "power_ramp_exponent",
    "predicted_power_exponent",
]


@dataclass(frozen=True)
class SweepRecord:
    """Final excitation density of one ramp plus its provenance.

    ``delta_E`` is filled only when both solvers ran (their difference).
    """

    T_i: float
    v_over_gamma: float
    E_final: float
    solver: str = "exact"
    model_tag: str = ""
    bath_tag: str = ""
    delta_E: float | None = None
    trajectory: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.T_i > 0:
            raise ValueError("T_i must be positive")
        if not self.v_over_gamma > 0:
            raise ValueError("v/gamma must be positive")
        if not 0 <= self.E_final <= 1:
            raise ValueError(f"E_final={self.E_final} outside [0, 1]")


@dataclass(frozen=True, eq=False)
class Family:
    key: float
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True, eq=False)
class CollapseDataset:
    """Rescaled curve families.

    ``kind`` is ``"Ti"`` or ``"v"`` (or ``"custom"``); ``a`` and ``b`` are the
    exponents applied to the family's scale on the abscissa and ordinate;
    ``crossover`` is the abscissa of the asymptote crossing, if known.
    """

    families: tuple
    a: float
    b: float
    kind: str = "custom"
    crossover: float | None = None
    window_factor: float = 10.0

    @property
    def x(self):
        return np.concatenate([f.x for f in self.families])

    @property
    def y(self):
        return np.concatenate([f.y for f in self.families])


@dataclass(frozen=True)
class AsymptoteFit:
    exponent: float
    stderr: float
    prefactor: float
    n_points: int
    window: tuple


def _group(records, key):
    groups = OrderedDict()
    for r in records:
        groups.setdefault(key(r), []).append(r)
    return groups


def _rescale(records, family_key, abscissa, scale, a, b, kind):
    records = list(records)
    if not records:
        raise ValueError("no records to rescale")
    fams = []
    for k, recs in sorted(_group(records, family_key).items()):
        recs = sorted(recs, key=abscissa)
        x = np.array([abscissa(r) for r in recs], dtype=float)
        if np.any(np.diff(x) <= 0):
            raise ValueError(f"family {k}: abscissa values are not distinct")
        sc = np.array([scale(r) for r in recs], dtype=float)
        e = np.array([r.E_final for r in recs], dtype=float)
        fams.append(Family(key=k, x=x * sc**a, y=e * sc**b))
    if not fams:
        raise ValueError("empty family")
    return CollapseDataset(tuple(fams), a, b, kind)


def rescale_families(records, by: str, a: float, b: float) -> CollapseDataset:
    """Generic rescaling: ``X = abscissa * g^a``, ``Y = E * g^b``.

    ``by="v_over_gamma"`` groups by ``v/gamma`` with abscissa ``T_i`` and
    ``g = gamma/v``; ``by="T_i"`` groups by ``T_i`` with abscissa ``v/gamma``
    and ``g = T_i``.  ``a = b = 0`` returns the raw curves.
    """
    if by == "v_over_gamma":
        return _rescale(records, lambda r: r.v_over_gamma, lambda r: r.T_i, lambda r: 1.0 / r.v_over_gamma, a, b, "custom")
    if by == "T_i":
        return _rescale(records, lambda r: r.T_i, lambda r: r.v_over_gamma, lambda r: r.T_i, a, b, "custom")
    raise ValueError("by must be 'v_over_gamma' or 'T_i'")


def rescale_Ti_collapse(records, z: float = 1.0, s: float = 1.0, crossover: float | None = None) -> CollapseDataset:
    """Group by ``v/gamma`` and rescale with powers of ``gamma/v``.

    ``crossover`` is the rescaled crossover ``T~_i*`` (optional, used by
    :func:`fit_asymptote` to place the fit windows).
    """
    ds = _rescale(
        records,
        family_key=lambda r: r.v_over_gamma,
        abscissa=lambda r: r.T_i,
        scale=lambda r: 1.0 / r.v_over_gamma,
        a=1.0 / (s + 1.0),
        b=1.0 / (z * (s + 1.0)),
        kind="Ti",
    )
    return CollapseDataset(ds.families, ds.a, ds.b, "Ti", crossover, 10.0)


def rescale_v_collapse(records, z: float = 1.0, s: float = 1.0, crossover: float | None = None) -> CollapseDataset:
    """Group by ``T_i``; abscissa ``(v/gamma) T_i^-(s+1)``, ordinate ``E T_i^(-1/z)``.

    ``crossover`` is ``T~_i*`` as for :func:`rescale_Ti_collapse`; on this
    abscissa the crossing sits at ``T~_i*^-(s+1)``.
    """
    ds = _rescale(
        records,
        family_key=lambda r: r.T_i,
        abscissa=lambda r: r.v_over_gamma,
        scale=lambda r: r.T_i,
        a=0.0,
        b=-1.0 / z,
        kind="v",
    )
    fams = tuple(Family(f.key, f.x * f.key ** -(s + 1.0), f.y) for f in ds.families)
    cross = None if crossover is None else crossover ** -(s + 1.0)
    return CollapseDataset(fams, -(s + 1.0), -1.0 / z, "v", cross, 10.0 ** (s + 1.0))


def collapse_quality(ds: CollapseDataset, n_grid: int = 200) -> float:
    """Largest relative spread ``(max - min)/median`` across families.

    Each family is interpolated (monotone cubic in log-log coordinates) onto
    a common log-spaced grid covering the overlap of all families.
    """
    fams = [f for f in ds.families if f.x.size]
    if len(fams) < 2:
        return 0.0
    lo = max(float(f.x.min()) for f in fams)
    hi = min(float(f.x.max()) for f in fams)
    if not hi > lo:
        raise ValueError("families do not overlap on the rescaled abscissa")
    grid = np.geomspace(lo, hi, n_grid)
    curves = []
    for f in fams:
        if f.x.size < 2:
            raise ValueError(f"family {f.key} has fewer than two points")
        if np.all(f.y > 0):
            interp = PchipInterpolator(np.log(f.x), np.log(f.y))
            curves.append(np.exp(interp(np.log(grid))))
        else:
            curves.append(PchipInterpolator(np.log(f.x), f.y)(np.log(grid)))
    stack = np.vstack(curves)
    med = np.median(stack, axis=0)
    spread = (stack.max(axis=0) - stack.min(axis=0)) / np.abs(med)
    return float(spread.max())


def fit_power_law(x, y):
    """Least-squares ``log y = p log x + log A``; returns ``(p, stderr(p), A)``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    n = lx.size
    if n < 2:
        raise ValueError("need at least two points")
    X = np.vstack([lx, np.ones(n)]).T
    coef, res, rank, _ = np.linalg.lstsq(X, ly, rcond=None)
    if rank < 2:
        raise ValueError("insufficient dynamic range: abscissa values coincide")
    resid = ly - X @ coef
    dof = max(n - 2, 1)
    cov = np.linalg.inv(X.T @ X) * (resid @ resid) / dof
    return float(coef[0]), float(math.sqrt(cov[0, 0])), float(math.exp(coef[1]))


def fit_asymptote(ds: CollapseDataset, regime: str, window=None, crossover: float | None = None, min_points: int = 5) -> AsymptoteFit:
    """Fit the small- or large-abscissa asymptote of a collapsed dataset.

    Parameters
    ----------
    regime : {"low", "high"}
        ``"low"``: power-law fit of all points below the window edge;
        ``"high"``: plateau, reported as the mean ordinate (``exponent`` is
        still the fitted log-log slope, which should be near zero).
    window : (float, float), optional
        Explicit abscissa window.  Defaults to ``X < crossover/f`` (low) or
        ``X > crossover*f`` (high), ``f = ds.window_factor`` (10 for the
        ``T_i`` collapse).
    crossover : float, optional
        Overrides ``ds.crossover``.
    """
    if regime not in ("low", "high"):
        raise ValueError("regime must be 'low' or 'high'")
    if window is None:
        cross = ds.crossover if crossover is None else crossover
        if cross is None:
            raise ValueError("need a window or a crossover location")
        f = ds.window_factor
        window = (0.0, cross / f) if regime == "low" else (cross * f, math.inf)
    x, y = ds.x, ds.y
    sel = (x >= window[0]) & (x <= window[1]) & (y > 0)
    n = int(sel.sum())
    if n < min_points:
        raise ValueError(f"insufficient dynamic range: {n} points in window {window}, need {min_points}")
    xs, ys = x[sel], y[sel]
    if xs.max() / xs.min() < 1.5:
        raise ValueError("insufficient dynamic range: window spans less than a factor 1.5")
    p, err, A = fit_power_law(xs, ys)
    if regime == "high":
        A = float(ys.mean())
    return AsymptoteFit(p, err, A, n, tuple(window))


def predicted_power_exponent(z: float, s: float, eta: float) -> float:
    """Exponent ``1/(z (s + 1/eta))`` of ``E`` versus ``v/gamma`` for power-law ramps."""
    return 1.0 / (z * (s + 1.0 / eta))


def power_ramp_exponent(records, min_decades: float = 2.0):
    """Fit ``E ~ (v/gamma)^p`` over records of one power-law protocol family.

    Returns ``(p, stderr, prefactor)``.
    """
    records = list(records)
    if len(records) < 3:
        raise ValueError("need at least three records")
    vg = np.array([r.v_over_gamma for r in records])
    e = np.array([r.E_final for r in records])
    if math.log10(vg.max() / vg.min()) < min_decades - 1e-9:
        raise ValueError(f"insufficient range: v/gamma must span {min_decades} decades")
    return fit_power_law(vg, e)
