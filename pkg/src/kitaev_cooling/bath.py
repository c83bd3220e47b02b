"""Bosonic bath spectral densities and the mode relaxation rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["BathSpec", "spectral_density", "relaxation_rate", "coth"]


@dataclass(frozen=True)
class BathSpec:
    """Power-law bath ``J(lam) = pi delta lam^s exp(-lam/lambda_c)`` with coupling ``gamma``."""

    gamma: float = 0.01
    delta: float = 1.0
    s: float = 1.0
    lambda_c: float = math.inf

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.s >= 0:
            raise ValueError("spectral exponent s must be non-negative")
        if not self.lambda_c > 0:
            raise ValueError("cutoff lambda_c must be positive")

    @property
    def pure_power_law(self) -> bool:
        return math.isinf(self.lambda_c)

    def tag(self) -> str:
        return f"gamma={self.gamma:g};delta={self.delta:g};s={self.s:g};lambda_c={self.lambda_c:g}"


def coth(x):
    """``coth(x)`` for ``x > 0`` as ``1 + 2/expm1(2x)``; ``coth(inf) = 1``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        out = 1.0 + 2.0 / np.expm1(2.0 * x)
    return float(out) if out.ndim == 0 else out


def spectral_density(bath: BathSpec, lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValueError("spectral density is defined for lam >= 0")
    out = math.pi * bath.delta * lam**bath.s
    if not bath.pure_power_law:
        out = out * np.exp(-lam / bath.lambda_c)
    return float(out) if out.ndim == 0 else out


def relaxation_rate(bath: BathSpec, lam, T):
    """Mode relaxation rate ``2 gamma J(lam) coth(lam / 2T)``.

    At ``T = 0`` the coth factor is 1.  For ``lam = 0`` and ``T > 0`` the finite
    limit ``4 pi gamma delta T lam^(s-1)`` is returned (0 for ``s > 1``);
    sub-Ohmic baths diverge there and raise ``ValueError``.
    """
    lam, T = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(T, dtype=float))
    if np.any(T < 0):
        raise ValueError("temperature must be non-negative")
    zero = lam == 0
    if np.any(zero & (T > 0)) and bath.s < 1:
        raise ValueError("relaxation rate of a zero mode diverges for s < 1")
    safe_lam = np.where(zero, 1.0, lam)
    with np.errstate(divide="ignore", over="ignore"):
        arg = np.where(T > 0, safe_lam / (2.0 * np.where(T > 0, T, 1.0)), np.inf)
    rate = 2.0 * bath.gamma * np.asarray(spectral_density(bath, safe_lam)) * coth(arg)
    if np.any(zero):
        limit = 4.0 * math.pi * bath.gamma * bath.delta * T if bath.s == 1 else np.zeros_like(T)
        rate = np.where(zero, limit, rate)
    return float(rate) if rate.ndim == 0 else rate
