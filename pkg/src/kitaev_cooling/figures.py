"""Parameter presets for the published figures, with an optional scale factor.

A scale ``F < 1`` shrinks the chain length and the number of points of every
geometric grid; captioned values (``v/gamma`` sets, ``mu``, ``phi``, ``T_i``
of single-temperature panels) are kept as they are.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bath import BathSpec
from .model import ChainModel, LongRange, critical_mu
from .sweep import RunConfig

__all__ = ["FigurePreset", "FIGURES", "figure_preset", "scaled_length", "geom_grid"]


@dataclass(frozen=True)
class FigurePreset:
    name: str
    kind: str  # trajectory | sweep | collapse_Ti | collapse_v | noncritical_Ti | noncritical_v
    configs: tuple
    description: str
    samples: int = 2


def scaled_length(L: int, scale: float) -> int:
    n = max(100, int(round(L * scale)))
    return n + (n % 2)


def geom_grid(lo: float, hi: float, n: int, scale: float = 1.0) -> tuple:
    m = max(5, int(round(n * scale))) if n > 1 else 1
    return tuple(float(x) for x in np.geomspace(lo, hi, m))


def _cfg(model, Ti_grid, vg_grid, bath=None, **kw):
    return RunConfig(model=model, bath=bath or BathSpec(), Ti_grid=tuple(Ti_grid), v_over_gamma_grid=tuple(vg_grid), **kw)


def _kitaev(L, mu=-1.0, **kw):
    return ChainModel(J=1.0, Delta=1.0, mu=mu, L=L, **kw)


FIG2_VG = (0.081, 0.81, 8.1, 81.0)
S1_TI = (0.3, 1.0, 3.0)
S2_MU = (-1.0, -0.9, -1.2, -1.5)
S3_PHI = (1.5, 1.75, 1.9)
S3_VG = (0.1, 1.0, 10.0)
FIG2A_VG = (0.01, 0.1, 1.0, 10.0)


def figure_preset(name: str, scale: float = 1.0) -> FigurePreset:
    """Build the preset ``name`` (one of :data:`FIGURES`) at the given scale."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    name = name.lower()
    if name == "2a":
        L = scaled_length(1_000_000, scale)
        cfg = _cfg(_kitaev(L), (15.0,), FIG2A_VG)
        return FigurePreset(name, "trajectory", (cfg,), "E and E_th versus T(t) from T_i = 15", samples=max(11, int(round(151 * min(scale, 1.0)))))
    if name in ("2b", "2c"):
        L = scaled_length(40_000, scale)
        cfg = _cfg(_kitaev(L), geom_grid(1e-2, 1e2, 33, scale), FIG2_VG)
        kind = "sweep" if name == "2b" else "collapse_Ti"
        desc = "E(t_f) versus T_i" if name == "2b" else "E sqrt(gamma/v) versus T_i sqrt(gamma/v)"
        return FigurePreset(name, kind, (cfg,), desc)
    if name in ("s1a", "s1b"):
        L = scaled_length(40_000, scale)
        cfg = _cfg(_kitaev(L), S1_TI, geom_grid(1e-3, 1e3, 25, scale))
        kind = "sweep" if name == "s1a" else "collapse_v"
        desc = "E(t_f) versus v/gamma" if name == "s1a" else "E/T_i versus (v/gamma)/T_i^2"
        return FigurePreset(name, kind, (cfg,), desc)
    if name == "s2a":
        L = scaled_length(40_000, scale)
        cfgs = tuple(_cfg(_kitaev(L, mu), geom_grid(1e-2, 1e2, 33, scale), (8.1,)) for mu in S2_MU)
        return FigurePreset(name, "noncritical_Ti", cfgs, "E(t_f) versus T_i at fixed mu, v/gamma = 8.1")
    if name == "s2b":
        L = scaled_length(40_000, scale)
        cfgs = tuple(_cfg(_kitaev(L, mu), (0.9,), geom_grid(1e-3, 1e3, 25, scale)) for mu in S2_MU)
        return FigurePreset(name, "noncritical_v", cfgs, "E(t_f) versus v/gamma at fixed mu, T_i = 0.9")
    if name == "s3":
        L = scaled_length(4_000_000, scale)
        cfgs = []
        for phi in S3_PHI:
            probe = ChainModel(J=1.0, Delta=1.0, mu=0.0, L=L, range=LongRange(phi))
            model = replace(probe, mu=critical_mu(probe))
            cfgs.append(_cfg(model, geom_grid(1e-3, 1e2, 21, scale), S3_VG))
        return FigurePreset(name, "collapse_Ti", tuple(cfgs), "long-range hopping collapse with (gamma/v)^(1/2z)")
    raise ValueError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")


FIGURES = ("2a", "2b", "2c", "s1a", "s1b", "s2a", "s2b", "s3")
