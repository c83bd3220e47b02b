"""Kitaev chains: Bogoliubov mode energies, critical points, thermal statistics.

Short-range chain (periodic, L sites)::

    H = sum_i J (c_i^+ c_{i+1} + h.c.) + Delta/2 (c_i c_{i+1} + h.c.) + 2 mu c_i^+ c_i

Fourier transforming and solving the 2x2 Bogoliubov-de Gennes block gives

    lam_k = sqrt((2 J cos k + 2 mu)^2 + Delta^2 sin^2 k).

The long-range chain replaces ``cos k`` and ``sin k`` by the coupling sums
``sum_l d_l^-phi cos(k l)`` and ``sum_l d_l^-alpha sin(k l)`` over
``l = 1 .. L/2``.  On the momentum grid these are discrete Fourier transforms
of the coupling profile, so the full spectrum costs one FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import expit, gamma as gamma_fn, zeta

__all__ = [
    "ShortRange",
    "LongRange",
    "ChainModel",
    "LowEnergyParams",
    "mode_grid",
    "mode_energy",
    "grid_energies",
    "low_energy_params",
    "critical_mu",
    "is_critical",
    "riemann_zeta",
    "fermi_dirac",
    "thermal_occupation",
    "thermal_excitation_density",
]


@dataclass(frozen=True)
class ShortRange:
    """Nearest-neighbour hopping and pairing."""

    def tag(self) -> str:
        return "SR"


@dataclass(frozen=True)
class LongRange:
    """Power-law hopping ``d_l^-phi`` and pairing ``d_l^-alpha``.

    ``alpha = inf`` keeps the pairing nearest-neighbour (hopping-only long range).
    """

    phi: float
    alpha: float = math.inf

    def __post_init__(self):
        if not self.phi > 1 or not self.alpha > 1:
            raise ValueError(f"long-range exponents must exceed 1, got phi={self.phi}, alpha={self.alpha}")

    def tag(self) -> str:
        return f"LR(phi={self.phi:g},alpha={self.alpha:g})"


@dataclass(frozen=True)
class ChainModel:
    J: float = 1.0
    Delta: float = 1.0
    mu: float = -1.0
    L: int = 40_000
    range: ShortRange | LongRange = field(default_factory=ShortRange)

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2 or self.L % 2:
            raise ValueError(f"L must be an even integer >= 2, got {self.L}")
        object.__setattr__(self, "L", int(self.L))

    @property
    def is_long_range(self) -> bool:
        return isinstance(self.range, LongRange)

    def tag(self) -> str:
        return f"{self.range.tag()};J={self.J:g};Delta={self.Delta:g};mu={self.mu:.12g};L={self.L}"


@dataclass(frozen=True)
class LowEnergyParams:
    """Low-energy form of the dispersion.

    Off criticality ``lam_k ~ lambda0 + lambda1 k^2``; at criticality
    ``lam_k ~ c |k|^z`` (``lambda0 = 0``).
    """

    lambda0: float
    lambda1: float
    c: float
    z: float


def riemann_zeta(s: float) -> float:
    """Riemann zeta for real ``s > 1``."""
    if not s > 1:
        raise ValueError("zeta is only needed for s > 1")
    return float(zeta(s))


def mode_grid(model: ChainModel) -> np.ndarray:
    """Momenta ``k_n = 2 pi (n+1)/L - pi``, n = 0..L-1, covering (-pi, pi]."""
    L = model.L
    return 2.0 * np.pi * (np.arange(L) + 1) / L - np.pi


def _distances(model: ChainModel, exponent: float, hopping: bool) -> np.ndarray:
    L = model.L
    l = np.arange(1, L // 2 + 1, dtype=float)
    w = l**-exponent
    if hopping:
        # d_{L/2} = 2^{1/phi} L/2 halves the doubly counted antipodal bond
        w[-1] *= 0.5
    return w


def _coupling_sums(model: ChainModel, k: np.ndarray):
    """Hopping (cos) and pairing (sin) structure factors at arbitrary momenta."""
    rng = model.range
    if not isinstance(rng, LongRange):
        return np.cos(k), np.sin(k)
    L = model.L
    l = np.arange(1, L // 2 + 1, dtype=float)
    wh = _distances(model, rng.phi, True)
    wp = _distances(model, rng.alpha, False) if math.isfinite(rng.alpha) else None
    cos_sum = np.empty_like(k)
    sin_sum = np.empty_like(k)
    flat_k = k.ravel()
    cs, ss = cos_sum.ravel(), sin_sum.ravel()
    step = max(1, 2_000_000 // l.size)
    for i in range(0, flat_k.size, step):
        phase = np.multiply.outer(flat_k[i : i + step], l)
        cs[i : i + step] = np.cos(phase) @ wh
        ss[i : i + step] = np.sin(phase) @ wp if wp is not None else np.sin(flat_k[i : i + step])
    return cos_sum, sin_sum


def _dispersion(model: ChainModel, cos_sum, sin_sum):
    xi = 2.0 * model.J * cos_sum + 2.0 * model.mu
    return np.hypot(xi, model.Delta * sin_sum)


def mode_energy(model: ChainModel, k):
    """Bogoliubov energy ``lam_k >= 0`` at momentum ``k`` (scalar or array, |k| <= pi)."""
    k = np.asarray(k, dtype=float)
    if np.any(np.abs(k) > np.pi * (1 + 1e-12)):
        raise ValueError("momentum outside the Brillouin zone [-pi, pi]")
    c, s = _coupling_sums(model, np.atleast_1d(k))
    lam = _dispersion(model, c, s).reshape(k.shape)
    return float(lam) if lam.ndim == 0 else lam


@lru_cache(maxsize=16)
def _grid_energies_cached(model: ChainModel) -> np.ndarray:
    L = model.L
    k = mode_grid(model)
    rng = model.range
    if not isinstance(rng, LongRange):
        lam = _dispersion(model, np.cos(k), np.sin(k))
    else:
        # k_n = 2 pi m / L with m = n + 1 - L/2; couplings live on l = 1 .. L/2
        m = (np.arange(L) + 1 - L // 2) % L
        prof = np.zeros(L)
        prof[1 : L // 2 + 1] = _distances(model, rng.phi, True)
        cos_sum = np.fft.fft(prof).real[m]
        if math.isfinite(rng.alpha):
            prof_p = np.zeros(L)
            prof_p[1 : L // 2 + 1] = _distances(model, rng.alpha, False)
            sin_sum = -np.fft.fft(prof_p).imag[m]
        else:
            sin_sum = np.sin(k)
        lam = _dispersion(model, cos_sum, sin_sum)
    lam.setflags(write=False)
    return lam


def grid_energies(model: ChainModel) -> np.ndarray:
    """Mode energies on :func:`mode_grid` (read-only, cached per model)."""
    return _grid_energies_cached(model)


def critical_mu(model: ChainModel) -> float:
    """Chemical potential at which the k = 0 gap closes: ``-J`` or ``-J zeta(phi)``."""
    if isinstance(model.range, LongRange):
        return -model.J * riemann_zeta(model.range.phi)
    return -model.J


def is_critical(model: ChainModel, rtol: float = 1e-10) -> bool:
    mu_c = critical_mu(model)
    return abs(model.mu - mu_c) <= rtol * max(1.0, abs(mu_c))


def _power_law_term(exponent: float, amplitude: float, odd: bool):
    # leading small-k behaviour of sum_l l^-e cos(kl) - zeta(e)  (odd=False)
    # or sum_l l^-e sin(kl)  (odd=True); returns (power, |prefactor|)
    if odd:
        if exponent < 2:
            return exponent - 1, amplitude * abs(gamma_fn(1 - exponent) * math.cos(math.pi * exponent / 2))
        if exponent == 2:
            raise ValueError("alpha = 2 carries logarithmic corrections; no pure power law")
        return 1.0, amplitude * float(zeta(exponent - 1))
    if exponent < 3:
        return exponent - 1, amplitude * abs(gamma_fn(1 - exponent) * math.sin(math.pi * exponent / 2))
    return 2.0, math.inf  # analytic k^2 term, never leading against the pairing


def low_energy_params(model: ChainModel) -> LowEnergyParams:
    """Gap/curvature off criticality, prefactor ``c`` and exponent ``z`` at criticality.

    Raises ``ValueError`` when ``lambda1 <= 0`` (the quadratic expansion then
    does not describe the band bottom).
    """
    J, D, mu = model.J, model.Delta, model.mu
    if is_critical(model):
        if not isinstance(model.range, LongRange):
            return LowEnergyParams(0.0, 0.0, abs(D), 1.0)
        phi, alpha = model.range.phi, model.range.alpha
        terms = []
        if phi < 2:
            terms.append(_power_law_term(phi, 2 * abs(J), odd=False))
        if math.isfinite(alpha):
            terms.append(_power_law_term(alpha, abs(D), odd=True))
        else:
            terms.append((1.0, abs(D)))
        z = min(p for p, _ in terms)
        c = math.sqrt(sum(a * a for p, a in terms if p == z))
        return LowEnergyParams(0.0, 0.0, c, z)
    if isinstance(model.range, LongRange):
        raise ValueError("quadratic low-energy expansion is only available for the short-range chain")
    shift = mu + J
    lambda0 = 2.0 * abs(shift)
    lambda1 = (D * D - 4.0 * J * shift) / (4.0 * abs(shift))
    if lambda1 <= 0:
        raise ValueError(
            f"lambda1 = {lambda1:g} <= 0: noncritical asymptotics require lambda1 > 0"
        )
    return LowEnergyParams(lambda0, lambda1, math.nan, math.nan)


def fermi_dirac(x):
    """``1/(exp(x) + 1)``; stable for any real ``x`` including ``+inf``."""
    out = expit(-np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out


def thermal_occupation(lam, T):
    """Equilibrium occupation ``P_th(lam/T)`` with the limits used along a ramp.

    A zero mode sits at 1/2 for any ``T > 0``; at ``T = 0`` every mode counts
    as empty (the gapless mode is a measure-zero point of the spectrum).
    """
    lam = np.asarray(lam, dtype=float)
    T = np.asarray(T, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(lam > 0, lam / np.where(T > 0, T, 1.0), 0.0)
    x = np.where(T <= 0, np.inf, x)
    return fermi_dirac(x)


def thermal_excitation_density(model: ChainModel, T: float) -> float:
    """``(1/L) sum_k P_th(lam_k/T)`` over the mode grid."""
    if T < 0:
        raise ValueError("temperature must be non-negative")
    lam = grid_energies(model)
    return float(np.mean(thermal_occupation(lam, T)))
