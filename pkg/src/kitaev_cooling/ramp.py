"""Cooling protocols and the per-mode rate equation.

Every Bogoliubov mode relaxes independently towards its instantaneous thermal
occupation,

    dP/dt = -tau^-1(lam, T(t)) [P - P_th(lam/T(t))],

starting from equilibrium at ``T_i``.  Two solvers are provided: an adaptive
Dormand-Prince integrator for any protocol, and for linear ramps the exact
integrating-factor solution (see :mod:`kitaev_cooling.kernel`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as spi

from . import kernel
from .bath import BathSpec, spectral_density
from .errors import ModeEvolutionError, QuadratureError, StepSizeUnderflow
from .integrate import dopri5, dopri5_batch
from .model import ChainModel, grid_energies, mode_energy, mode_grid, thermal_occupation

__all__ = [
    "RampProtocol",
    "ModeOccupations",
    "Trajectory",
    "evolve_mode_ode",
    "evolve_mode_exact",
    "evolve_all",
    "excitation_density",
    "unique_modes",
]

SOLVERS = ("exact", "ode")
# steps are capped at t_f / MIN_STEPS
MIN_STEPS = 32
# per-step error target relative to the user tolerance; local errors add up
# along the ramp, and tol/10 per step keeps the endpoint within 10 tol
LOCAL_TOL = 0.1


@dataclass(frozen=True)
class RampProtocol:
    """Temperature ramp ``T(t) = T_i (1 - v t / T_i)^eta``, stopped at ``T_f``.

    ``eta = 1`` is the linear ramp ``T_i - v t``.
    """

    T_i: float
    v: float
    T_f: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if not self.T_i > 0:
            raise ValueError("T_i must be positive")
        if not self.v > 0:
            raise ValueError("ramp velocity v must be positive")
        if not 0 <= self.T_f < self.T_i:
            raise ValueError("need 0 <= T_f < T_i")
        if not self.eta > 0:
            raise ValueError("eta must be positive")

    @property
    def linear(self) -> bool:
        return self.eta == 1

    @property
    def t_f(self) -> float:
        if self.linear:
            return (self.T_i - self.T_f) / self.v
        return self.T_i / self.v * (1.0 - (self.T_f / self.T_i) ** (1.0 / self.eta))

    def temperature(self, t):
        """``T(t)`` on ``[0, t_f]``, clamped at ``T_f`` against rounding."""
        t = np.asarray(t, dtype=float)
        t_f = self.t_f
        if np.any(t < 0) or np.any(t > t_f * (1 + 1e-12)):
            raise ValueError(f"time outside [0, t_f={t_f:.6g}]")
        out = self._temperature(t)
        return float(out) if out.ndim == 0 else out

    def _temperature(self, t):
        # unchecked, vectorised
        if self.linear:
            T = self.T_i - self.v * t
        else:
            T = self.T_i * np.maximum(1.0 - self.v * t / self.T_i, 0.0) ** self.eta
        # for eta < 1 rounding in 1 - vt/T_i is amplified near the end point
        return np.where(t >= self.t_f, self.T_f, np.maximum(T, self.T_f))

    def time_at(self, T):
        """Inverse of :meth:`temperature`."""
        T = np.asarray(T, dtype=float)
        if np.any(T > self.T_i) or np.any(T < self.T_f):
            raise ValueError("temperature outside [T_f, T_i]")
        if self.linear:
            t = (self.T_i - T) / self.v
        else:
            t = self.T_i / self.v * (1.0 - (T / self.T_i) ** (1.0 / self.eta))
        t = np.minimum(t, self.t_f)
        return float(t) if t.ndim == 0 else t


@dataclass(frozen=True, eq=False)
class ModeOccupations:
    """Occupations ``p`` of the modes ``grid`` (energies ``energies``) at ``temperature``."""

    grid: np.ndarray
    energies: np.ndarray
    p: np.ndarray
    temperature: float

    def __post_init__(self):
        if not (len(self.grid) == len(self.energies) == len(self.p)):
            raise ValueError("grid, energies and p must have equal length")
        p = np.asarray(self.p)
        if p.size and (p.min() < 0 or p.max() > 1):
            raise ValueError("occupations must lie in [0, 1]")


def excitation_density(occ: ModeOccupations) -> float:
    """Mean occupation ``(1/L) sum_k P_k``."""
    return float(np.mean(occ.p))


def unique_modes(model: ChainModel):
    """Representatives of the ``k <-> -k`` pairs on the grid.

    Returns ``(index, weight)``: grid indices for ``|k| = 2 pi m / L`` with
    ``m = 0 .. L/2`` and multiplicities (1 for ``k = 0, pi``, else 2).
    """
    L = model.L
    m = np.arange(L // 2 + 1)
    index = L // 2 - 1 + m
    weight = np.full(m.size, 2.0)
    weight[0] = weight[-1] = 1.0
    return index, weight


def _expand(model: ChainModel, p_unique):
    # unique-mode values back onto the full grid, k_n -> m = n + 1 - L/2
    L = model.L
    m = np.abs(np.arange(L) + 1 - L // 2)
    return p_unique[..., m]


def _prefactor(bath: BathSpec, lam):
    return 2.0 * bath.gamma * spectral_density(bath, lam)


# -- single mode -----------------------------------------------------------


def _scalar_rhs(lam: float, bath: BathSpec, protocol: RampProtocol):
    pref = _prefactor(bath, lam)
    T_i, v, T_f, eta = protocol.T_i, protocol.v, protocol.T_f, protocol.eta
    linear = protocol.linear

    def rhs(t, y):
        if linear:
            T = T_i - v * t
        else:
            base = 1.0 - v * t / T_i
            T = T_i * (base if base > 0 else 0.0) ** eta
        if T <= T_f:
            T = T_f
        if T <= 0:
            return -pref * y
        x = lam / T
        if x > 700:
            return -pref * y
        e = math.expm1(x)
        return -pref * (1.0 + 2.0 / e) * (y - 1.0 / (e + 2.0))

    return rhs


def evolve_mode_ode(model: ChainModel, bath: BathSpec, protocol: RampProtocol, k: float, tol: float = 1e-8, samples: int = 2):
    """Integrate one mode with adaptive Dormand-Prince steps.

    Parameters
    ----------
    k : float
        Momentum in ``[-pi, pi]``.
    tol : float
        Target for the endpoint error; each accepted step keeps its local
        error estimate below ``tol/10``.
    samples : int
        Number of uniformly spaced temperatures (from ``T_i`` down to ``T_f``)
        at which the trajectory is reported.

    Returns
    -------
    temperatures, P : ndarray
        The last entry is the ramp endpoint.

    Raises
    ------
    StepSizeUnderflow
        When a step below ``1e-12 t_f`` would be required; the message names
        ``t`` and the mode energy.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    lam = mode_energy(model, k)
    temps = np.linspace(protocol.T_i, protocol.T_f, samples)
    p0 = float(thermal_occupation(lam, protocol.T_i))
    if lam == 0:
        return temps, np.full(samples, p0)
    times = protocol.time_at(temps)
    times[-1] = protocol.t_f
    rhs = _scalar_rhs(lam, bath, protocol)
    _, ys = dopri5(rhs, 0.0, p0, protocol.t_f, tol=LOCAL_TOL * tol, t_eval=times, max_step=protocol.t_f / MIN_STEPS, context=f"lambda={lam:.6g}")
    return temps, ys


def _ibp_segments(x_lo, x_hi, a, coth_lo):
    # breakpoints resolving the relaxation layer of width ~ 1/(a coth) at x_lo
    # and the thermal window 0.02 < x < 50
    width = 1.0 / (a * coth_lo) if a > 0 else math.inf
    pts = {x_lo, x_hi}
    if math.isfinite(width):
        w = width / 16
        while x_lo + w < x_hi and w < 64 * width:
            pts.add(x_lo + w)
            w *= 4
    for p in (0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0):
        if x_lo < p < x_hi:
            pts.add(p)
    return sorted(pts)


def evolve_mode_exact(model: ChainModel, bath: BathSpec, protocol: RampProtocol, k: float, quad_tol: float = 1e-10) -> float:
    """Endpoint occupation of one mode from the integrating-factor solution.

    Linear ramps only.  The solution is integrated by parts so that all
    exponentials carry non-positive arguments::

        P = P_th(1/x_f) + int_{x_f}^{x_i} exp(-a [g(x) - g(x_f)]) D(x) dx

    with ``x = T/lam``, ``a = 2 gamma J(lam) lam / v``,
    ``g(x) = int_0^x coth(1/2t) dt`` and ``D = d P_th(1/x) / dx``.  Each
    segment is integrated with adaptive Gauss-Kronrod quadrature.

    Raises
    ------
    QuadratureError
        If a segment does not converge; names the segment.
    """
    if not protocol.linear:
        raise ValueError("the exact solver applies to linear ramps (eta = 1) only")
    if not quad_tol > 0:
        raise ValueError("quad_tol must be positive")
    lam = mode_energy(model, k)
    if lam == 0:
        return float(thermal_occupation(lam, protocol.T_i))
    x_lo = protocol.T_f / lam
    x_hi = protocol.T_i / lam
    a = _prefactor(bath, lam) * lam / protocol.v
    base = float(thermal_occupation(lam, protocol.T_f))
    if a == 0:
        return float(thermal_occupation(lam, protocol.T_i))
    g_lo = kernel.coth_integral(x_lo)
    coth_lo = 1.0 if x_lo == 0 else 1.0 + 2.0 / math.expm1(1.0 / x_lo)

    def integrand(x):
        expo = -a * (kernel.coth_integral(x) - g_lo)
        return math.exp(min(expo, 0.0)) * float(kernel.thermal_derivative(x))

    total = 0.0
    pts = _ibp_segments(x_lo, x_hi, a, coth_lo)
    n_seg = len(pts) - 1
    for lo, hi in zip(pts[:-1], pts[1:]):
        if a * (kernel.coth_integral(lo) - g_lo) > 745:
            break  # exp underflows: nothing further contributes
        with np.errstate(all="ignore"):
            val, err, info = spi.quad(integrand, lo, hi, epsabs=quad_tol / n_seg, epsrel=1e-13, limit=200, full_output=1)[:3]
        if err > quad_tol / n_seg and err > 1e-12 * abs(val):
            raise QuadratureError(
                f"quadrature did not converge on [{lo:.6g}, {hi:.6g}] (error estimate {err:.2e})",
                interval=(lo, hi),
                error=err,
            )
        total += val
    return min(max(base + total, 0.0), 1.0)


# -- whole grid ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Excitation density along a ramp, sampled on a uniform temperature grid.

    ``p_unique[j]`` holds occupations of the ``L/2 + 1`` distinct ``|k|``
    modes at ``temperatures[j]``; :meth:`occupations` expands them to the grid.
    """

    model: ChainModel
    temperatures: np.ndarray
    E: np.ndarray
    p_unique: np.ndarray
    solver: str

    def occupations(self, j: int = -1) -> ModeOccupations:
        return ModeOccupations(
            grid=mode_grid(self.model),
            energies=grid_energies(self.model),
            p=_expand(self.model, self.p_unique[j]),
            temperature=float(self.temperatures[j]),
        )

    @property
    def E_final(self) -> float:
        return float(self.E[-1])

    def __iter__(self):
        for j in range(self.temperatures.size):
            yield float(self.temperatures[j]), self.occupations(j), float(self.E[j])


def _reduce(p_unique, weight, L):
    # fixed-order weighted mean; identical arrays give identical sums
    return np.einsum("...i,i->...", p_unique, weight) / L


def evolve_all(
    model: ChainModel,
    bath: BathSpec,
    protocol: RampProtocol,
    tol: float = 1e-8,
    samples: int = 2,
    solver: str = "exact",
) -> Trajectory:
    """Evolve every mode of the grid and record ``E`` at ``samples`` temperatures.

    Temperatures are uniformly spaced from ``T_i`` to ``T_f`` (both included).
    ``solver="exact"`` (linear ramps) uses the tabulated integrating-factor
    kernel; ``solver="ode"`` runs the batched adaptive integrator with
    absolute step tolerance ``tol``.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}, got {solver!r}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    idx, weight = unique_modes(model)
    lam = np.asarray(grid_energies(model))[idx]
    temps = np.linspace(protocol.T_i, protocol.T_f, samples)
    if solver == "exact":
        p = _evolve_exact_grid(bath, protocol, lam, temps)
    else:
        p = _evolve_ode_grid(model, bath, protocol, lam, temps, tol, idx)
    p.setflags(write=False)
    E = _reduce(p, weight, model.L)
    return Trajectory(model=model, temperatures=temps, E=E, p_unique=p, solver=solver)


def _evolve_exact_grid(bath, protocol, lam, temps):
    if not protocol.linear:
        raise ValueError("the exact solver applies to linear ramps (eta = 1) only")
    zero = lam == 0
    safe = np.where(zero, 1.0, lam)
    a = _prefactor(bath, safe) * safe / protocol.v
    x_hi = protocol.T_i / safe
    out = np.empty((temps.size, lam.size))
    for j, T in enumerate(temps):
        out[j] = kernel.relaxed_occupation(T / safe, x_hi, a)
    # a zero mode sits at P_th = 1/2 for the whole ramp
    out[:, zero] = 0.5
    return out


def _evolve_ode_grid(model, bath, protocol, lam, temps, tol, idx):
    n = lam.size
    out = np.empty((temps.size, n))
    live = np.nonzero(lam > 0)[0]
    out[:, lam == 0] = 0.5
    out[0] = thermal_occupation(lam, protocol.T_i)
    out[0, lam == 0] = 0.5
    if live.size == 0:
        return out
    lam_l = lam[live]
    pref = _prefactor(bath, lam_l)
    T_of = protocol._temperature
    t_f = protocol.t_f

    def rhs(t, y, lane):
        T = T_of(t)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            x = np.where(T > 0, lam_l[lane] / np.where(T > 0, T, 1.0), np.inf)
            e = np.expm1(np.minimum(x, 700.0))
            occ = np.where(x >= 700.0, 0.0, 1.0 / (e + 2.0))
            coth = np.where(x >= 700.0, 1.0, 1.0 + 2.0 / e)
        return -pref[lane] * coth * (y - occ)

    times = protocol.time_at(temps)
    times[-1] = t_f
    y = out[0, live].copy()
    h = None
    floor = 1e-12 * t_f
    for j in range(1, temps.size):
        try:
            y, h = dopri5_batch(rhs, times[j - 1], y, times[j], tol=LOCAL_TOL * tol, min_step=floor, h0=h, max_step=t_f / MIN_STEPS)
        except StepSizeUnderflow as exc:
            lane = int(exc.context.split()[-1]) if exc.context else 0
            g = int(idx[live[lane]])
            raise ModeEvolutionError(g, float(mode_grid(model)[g]), float(lam_l[lane]), exc) from exc
        out[j, live] = y
    np.clip(out, 0.0, 1.0, out=out)
    return out

