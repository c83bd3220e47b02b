"""Continuum-limit excitation density and its asymptotics.

For a critical chain with ``lam_k ~ c |k|^z`` the sum over modes becomes

    E(T, T_i, gamma/v) = 1/(pi z c^(1/z)) int_0^inf dlam lam^(1/z-1) P(T/lam, T_i/lam, gamma lam^(s+1)/v)

where ``P(x, y, w)`` is the occupation of a mode cooled from ``y`` to ``x``
(both in units of the mode energy) with relaxation strength ``w``.  In the
notation of :mod:`kitaev_cooling.kernel`, ``P(x, y, w)`` is
``relaxed_occupation(x, y, 2 pi delta w)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as spi
from scipy.special import gamma as gamma_fn, k1e

from . import kernel
from .bath import BathSpec, spectral_density
from .errors import QuadratureError
from .model import ChainModel, fermi_dirac, low_energy_params

__all__ = [
    "ScalingArgs",
    "f_kernel",
    "p_trivariate",
    "excitation_continuum",
    "continuum_density",
    "c1_constant",
    "c2_constant",
    "crossover_scaled",
    "crossover_Ti",
    "dominating_bound",
    "log_dominating_bound",
    "noncritical_lowTi",
    "noncritical_smallv",
]

_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class ScalingArgs:
    """Arguments of ``P(x, y, w)``: ``x = T/lam``, ``y = T_i/lam``, ``w = gamma lam^(s+1)/v``."""

    x: float
    y: float
    w: float

    def __post_init__(self):
        if not 0 <= self.x <= self.y:
            raise ValueError("need 0 <= x <= y")
        if not self.w >= 0:
            raise ValueError("w must be non-negative")


def f_kernel(x, y, delta: float = 1.0):
    """``f(x, y) = 2 pi delta int_y^x coth(1/(2t)) dt`` (signed)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0) or np.any(y < 0):
        raise ValueError("f_kernel needs non-negative arguments")
    out = 2.0 * math.pi * delta * (kernel.coth_integral(x) - kernel.coth_integral(y))
    return float(out) if np.ndim(out) == 0 else out


def p_trivariate(args: ScalingArgs, delta: float = 1.0) -> float:
    """Occupation ``P(x, y, w)`` after cooling from ``y`` to ``x``."""
    return float(kernel.relaxed_occupation(args.x, args.y, 2.0 * math.pi * delta * args.w))


# -- continuum quadrature --------------------------------------------------


def _integrand(u, T, T_i, gamma_over_v, z, bath):
    # lam^(1/z) P on log-spaced nodes u = ln lam (dlam = lam du)
    lam = np.exp(u)
    a = 2.0 * gamma_over_v * spectral_density(bath, lam) * lam
    p = kernel.relaxed_occupation(T / lam, T_i / lam, a)
    return lam ** (1.0 / z) * p


def _panel_sum(lo, hi, h, f):
    n = max(1, int(math.ceil((hi - lo) / h - 1e-9)))
    edges = lo + (hi - lo) * np.arange(n + 1) / n
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (0.5 * (edges[1:] + edges[:-1]))[:, None] + half[:, None] * _GL16_X
    vals = f(nodes.ravel()).reshape(nodes.shape)
    return float((vals * _GL16_W).sum(axis=1) @ half), vals


def continuum_density(T, T_i, gamma_over_v, c, z, bath: BathSpec, rtol: float = 1e-10, u_span: float = 140.0):
    """Continuum excitation density for given dispersion prefactor ``c`` and exponent ``z``.

    The integral is done in ``u = ln lam`` with composite 16-point
    Gauss-Legendre panels.  The window is centred on the physical scales
    (``T``, ``T_i`` and the freeze-out energy where ``gamma lam^(s+1)/v ~ 1``),
    extended upwards until the integrand is negligible, and the panel width
    is halved until two successive estimates agree to ``rtol``.
    """
    if not (T >= 0 and T_i > 0 and T <= T_i):
        raise ValueError("need 0 <= T <= T_i, T_i > 0")
    if not gamma_over_v >= 0:
        raise ValueError("gamma/v must be non-negative")
    if not (c > 0 and z > 0):
        raise ValueError("continuum formula needs c > 0 and z > 0")
    scales = [T_i] if math.isfinite(T_i) else []
    if gamma_over_v > 0:
        scales.append((2.0 * math.pi * bath.delta * gamma_over_v) ** (-1.0 / (bath.s + 1.0)))
    if not scales:
        raise ValueError("no finite energy scale: the integral diverges")
    if T > 0:
        # a final temperature far below the other scales changes nothing
        scales.append(max(T, 1e-12 * min(scales)))
    u_lo = math.log(min(scales)) - 25.0
    u_hi = math.log(max(scales)) + 6.0

    def f(u):
        return _integrand(u, T, T_i, gamma_over_v, z, bath)

    # extend the upper end until the integrand has died away
    while True:
        edge = f(np.array([u_hi - 1.0, u_hi]))
        peak = f(np.linspace(u_lo, u_hi, 200)).max()
        if edge.max() <= 1e-18 * max(peak, 1e-300) and edge[1] <= edge[0]:
            break
        u_hi += 4.0
        if u_hi - u_lo > u_span:
            raise QuadratureError(
                "integrand does not decay within the quadrature window; the bound decays too slowly",
                interval=(math.exp(u_lo), math.exp(u_hi)),
            )

    # below lam_min the occupation is frozen at its lam -> 0 value
    lam_min = math.exp(u_lo)
    p_min = float(f(np.array([u_lo]))[0]) / lam_min ** (1.0 / z)
    lower = z * lam_min ** (1.0 / z) * p_min

    h = 0.5
    prev, _ = _panel_sum(u_lo, u_hi, h, f)
    for _ in range(6):
        h *= 0.5
        cur, _ = _panel_sum(u_lo, u_hi, h, f)
        if abs(cur - prev) <= rtol * abs(cur) or cur == 0.0:
            return (cur + lower) / (math.pi * z * c ** (1.0 / z))
        prev = cur
    raise QuadratureError(f"panel refinement did not converge (last change {abs(cur - prev):.2e})")


def excitation_continuum(T, T_i, gamma_over_v, model: ChainModel, bath: BathSpec, rtol: float = 1e-10) -> float:
    """Continuum ``E(T, T_i, gamma/v)`` for a critical model (``c`` and ``z`` from the model)."""
    params = low_energy_params(model)
    if params.lambda0 != 0:
        raise ValueError("the continuum formula requires a critical model (mu = mu_c)")
    return continuum_density(T, T_i, gamma_over_v, params.c, params.z, bath, rtol=rtol)


# -- constants -------------------------------------------------------------


def log_dominating_bound(lam, bath: BathSpec, z: float = 1.0):
    """``ln U(lam)``; finite for every ``lam > 0``."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("dominating bound is defined for lam > 0")
    b = 2.0 * math.pi * bath.delta * lam ** (bath.s + 1.0)
    arg = 2.0 * np.sqrt(b)
    out = math.log(2.0) + (1.0 / z - 1.0) * np.log(lam) + 0.5 * np.log(b) + np.log(k1e(arg)) - arg
    return float(out) if out.ndim == 0 else out


def dominating_bound(lam, bath: BathSpec, z: float = 1.0):
    """``U(lam) = 2 lam^(1/z-1) sqrt(b) K_1(2 sqrt(b))`` with ``b = 2 pi delta lam^(s+1)``.

    Majorises ``lam^(1/z-1) P(0, inf, lam^(s+1))`` for all ``lam > 0``.
    """
    out = np.exp(log_dominating_bound(lam, bath, z))
    return float(out) if np.ndim(out) == 0 else out


def c1_constant(bath: BathSpec | None = None, z: float = 1.0, c: float = 1.0) -> float:
    """Plateau constant ``c1 = lim_{T_i -> inf} E(0, T_i, 1)``.

    The truncation of the quadrature window is certified with the
    dominating bound: the neglected tail of ``U`` is checked to be below
    ``1e-12 c1``.
    """
    bath = BathSpec() if bath is None else bath
    if bath.s < 1:
        raise ValueError("c1 requires s >= 1")
    if not bath.pure_power_law:
        bath = BathSpec(gamma=bath.gamma, delta=bath.delta, s=bath.s)
    val = continuum_density(0.0, math.inf, 1.0, c, z, bath)
    # tail beyond the point where U has dropped by 1e-18 from its peak
    lam_t = 1.0
    while dominating_bound(lam_t, bath, z) > 1e-18:
        lam_t *= 2.0
    tail = spi.quad(lambda l: dominating_bound(l, bath, z), lam_t, np.inf)[0]
    tail /= math.pi * z * c ** (1.0 / z)
    if tail > 1e-12 * val:
        raise QuadratureError("dominating bound does not certify the truncation", interval=(lam_t, math.inf), error=tail)
    return val


def _eta_dirichlet(s: float) -> float:
    if s == 1:
        return math.log(2.0)
    from scipy.special import zeta

    return (1.0 - 2.0 ** (1.0 - s)) * float(zeta(s))


def c2_constant(model: ChainModel | None = None, method: str = "quad", c: float | None = None, z: float | None = None) -> float:
    """Low-``T_i`` slope ``c2 = E(0, 1, 0)``: frozen thermal density at ``T_i = 1``.

    ``method="closed"`` returns ``Gamma(1/z) eta(1/z) / (pi z c^(1/z))``
    (``ln 2 / (pi |Delta|)`` for ``z = 1``); ``method="quad"`` integrates the
    Fermi function numerically.
    """
    if c is None or z is None:
        params = low_energy_params(ChainModel() if model is None else model)
        if params.lambda0 != 0:
            raise ValueError("c2 is defined for a critical model")
        c, z = params.c, params.z
    norm = math.pi * z * c ** (1.0 / z)
    if method == "closed":
        return gamma_fn(1.0 / z) * _eta_dirichlet(1.0 / z) / norm
    if method != "quad":
        raise ValueError("method must be 'quad' or 'closed'")
    p = 1.0 / z - 1.0
    val = 0.0
    for lo, hi in ((0.0, 1.0), (1.0, 10.0), (10.0, np.inf)):
        part, err = spi.quad(lambda l: l**p * fermi_dirac(l), lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
        val += part
    return val / norm


def crossover_scaled(bath: BathSpec | None = None, c: float = 1.0, z: float = 1.0) -> float:
    """Rescaled crossover ``T~_i* = (c1/c2)^z`` where the two asymptotes meet."""
    bath = BathSpec() if bath is None else bath
    return (c1_constant(bath, z, c) / c2_constant(method="closed", c=c, z=z)) ** z


def crossover_Ti(bath: BathSpec, model: ChainModel, v_over_gamma: float) -> float:
    """Initial temperature separating the linear and plateau regimes.

    ``T_i* = T~_i* (v/gamma)^(1/(s+1))``; about ``0.239 sqrt(v/gamma)`` for
    the Ohmic, ``z = 1`` case.
    """
    if not v_over_gamma > 0:
        raise ValueError("v/gamma must be positive")
    params = low_energy_params(model)
    if params.lambda0 != 0:
        raise ValueError("crossover_Ti needs a critical model")
    return crossover_scaled(bath, params.c, params.z) * v_over_gamma ** (1.0 / (bath.s + 1.0))


# -- away from criticality -------------------------------------------------


def _gapped(model: ChainModel):
    params = low_energy_params(model)  # raises for lambda1 <= 0
    if not params.lambda0 > 0:
        raise ValueError("noncritical asymptotics need a gapped model (lambda0 > 0)")
    return params.lambda0, params.lambda1


def noncritical_lowTi(model: ChainModel, T_i: float) -> float:
    """``E ~ 1/2 sqrt(T_i/(pi lambda1)) exp(-lambda0/T_i)`` for ``T_i -> 0``.

    At low ``T_i`` the modes never relax and keep their initial thermal
    occupation; this is the thermal density of the quadratic band bottom.
    """
    if not T_i > 0:
        raise ValueError("T_i must be positive")
    lambda0, lambda1 = _gapped(model)
    return 0.5 * math.sqrt(T_i / (math.pi * lambda1)) * math.exp(-lambda0 / T_i)


def noncritical_smallv(model: ChainModel, bath: BathSpec, v_over_gamma: float) -> float:
    """``E ~ sqrt(lambda0/lambda1)/sqrt(8) exp(-sqrt(8 pi) lambda0 sqrt(gamma/v))`` for ``v -> 0``.

    Written for general ``delta`` and ``s``: the exponent is
    ``2 sqrt(2 pi delta lambda0^(s+1) gamma/v)`` and the prefactor
    ``1/2 sqrt(lambda0/((s+1) lambda1))``; ``delta = s = 1`` gives the form above.
    """
    if not v_over_gamma > 0:
        raise ValueError("v/gamma must be positive")
    lambda0, lambda1 = _gapped(model)
    s = bath.s
    expo = 2.0 * math.sqrt(2.0 * math.pi * bath.delta * lambda0 ** (s + 1.0) / v_over_gamma)
    return 0.5 * math.sqrt(lambda0 / ((s + 1.0) * lambda1)) * math.exp(-expo)
