"""Run configuration, parallel parameter sweeps and CSV persistence.

Config files are INI-style with four sections::

    [model]
    J = 1
    Delta = 1
    mu = -1            ; or "critical"
    L = 40000
    range = short      ; or "long" with phi = ..., alpha = ...

    [bath]
    gamma = 0.01
    delta = 1
    s = 1
    lambda_c = inf

    [protocol]
    Ti_grid = geom(0.01, 100, 33)     ; or a comma separated list
    v_over_gamma_grid = 0.081, 0.81, 8.1, 81
    eta = 1
    Tf = 0

    [run]
    solver = exact     ; ode | exact | both
    tol = 1e-8
    workers = 1
    out = records.csv

Unknown sections or keys are rejected with their line number.
"""

from __future__ import annotations

import configparser
import csv
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bath import BathSpec
from .errors import NumericalError
from .model import ChainModel, LongRange, ShortRange, critical_mu, is_critical, low_energy_params
from .ramp import RampProtocol, evolve_all
from .scaling import SweepRecord

__all__ = [
    "ConfigError",
    "CsvFormatError",
    "RunConfig",
    "SweepOutcome",
    "PointFailure",
    "parse_config",
    "parse_grid",
    "run_sweep",
    "run_point",
    "write_csv",
    "read_csv",
    "format_float",
    "CSV_HEADER",
]

CSV_HEADER = ("T_i", "v_over_gamma", "E_final", "solver", "model_tag", "bath_tag")
SOLVER_CHOICES = ("ode", "exact", "both")

_SCHEMA = {
    "model": {"J", "Delta", "mu", "L", "range", "phi", "alpha"},
    "bath": {"gamma", "delta", "s", "lambda_c"},
    "protocol": {"Ti_grid", "v_over_gamma_grid", "eta", "Tf"},
    "run": {"solver", "tol", "workers", "out", "samples", "seed"},
}
_REQUIRED_SECTIONS = ("model", "bath", "protocol")


class ConfigError(ValueError):
    """Invalid configuration; message names the section, key and line."""


class CsvFormatError(ValueError):
    """Malformed record file; message names the row."""


@dataclass(frozen=True)
class RunConfig:
    model: ChainModel
    bath: BathSpec
    Ti_grid: tuple
    v_over_gamma_grid: tuple
    eta: float = 1.0
    Tf: float = 0.0
    solver: str = "exact"
    tol: float = 1e-8
    workers: int = 1
    out: str | None = None
    samples: int = 2
    seed: int | None = None  # reserved; the dynamics is deterministic

    def __post_init__(self):
        if not self.Ti_grid or not self.v_over_gamma_grid:
            raise ConfigError("grids must be nonempty")
        if any(not t > 0 for t in self.Ti_grid):
            raise ConfigError("Ti_grid values must be positive")
        if any(not v > 0 for v in self.v_over_gamma_grid):
            raise ConfigError("v_over_gamma_grid values must be positive (v > 0 required)")
        if self.solver not in SOLVER_CHOICES:
            raise ConfigError(f"solver must be one of {SOLVER_CHOICES}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.samples < 2:
            raise ConfigError("samples must be >= 2")
        if self.solver in ("exact", "both") and self.eta != 1:
            raise ConfigError("the exact solver needs eta = 1; use solver = ode for power-law ramps")

    def grid(self):
        """Grid points in their fixed order: ``v/gamma`` outer, ``T_i`` inner."""
        return [(t, v) for v in self.v_over_gamma_grid for t in self.Ti_grid]


_GEOM = re.compile(r"^(geom|lin)\(\s*([^,]+),\s*([^,]+),\s*(\d+)\s*\)$")


def parse_grid(text: str) -> tuple:
    """``"0.1, 1, 10"``, ``"geom(lo, hi, n)"`` or ``"lin(lo, hi, n)"``."""
    text = text.strip()
    m = _GEOM.match(text)
    if m:
        kind, lo, hi, n = m.group(1), float(m.group(2)), float(m.group(3)), int(m.group(4))
        if n < 1:
            raise ValueError("grid needs at least one point")
        if kind == "geom":
            if not (lo > 0 and hi > 0):
                raise ValueError("geom grid bounds must be positive")
            vals = np.geomspace(lo, hi, n)
        else:
            vals = np.linspace(lo, hi, n)
        return tuple(float(v) for v in vals)
    parts = [p for p in (s.strip() for s in text.split(",")) if p]
    if not parts:
        raise ValueError("empty grid")
    return tuple(float(p) for p in parts)


def _key_lines(text: str):
    lines = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            lines[(section, None)] = no
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
        lines[(section, key)] = no
    return lines


def parse_config(text: str, noncritical: bool = False) -> RunConfig:
    """Parse and validate a configuration.

    With ``noncritical=True`` the model must be an off-critical short-range
    chain with ``lambda1 > 0``, the regime covered by the gapped asymptotics.
    """
    lines = _key_lines(text)

    def where(section, key=None):
        no = lines.get((section, key))
        return f"[{section}]" + (f" {key}" if key else "") + (f" (line {no})" if no else "")

    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), strict=True, interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section {where(sec)}")
        for key in cp[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {where(sec, key)}")
    for sec in _REQUIRED_SECTIONS:
        if not cp.has_section(sec):
            raise ConfigError(f"missing section [{sec}]")

    def get(sec, key, conv, default=None, required=False):
        if cp.has_section(sec) and key in cp[sec]:
            raw = cp[sec][key]
            try:
                return conv(raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value {raw!r} for {where(sec, key)}: {exc}") from exc
        if required:
            raise ConfigError(f"missing key {key} in [{sec}]")
        return default

    rng_kind = get("model", "range", lambda s: s.strip().lower(), "short")
    if rng_kind in ("short", "sr"):
        for key in ("phi", "alpha"):
            if key in cp["model"]:
                raise ConfigError(f"{where('model', key)} only applies to range = long")
        rng = ShortRange()
    elif rng_kind in ("long", "lr"):
        phi = get("model", "phi", float, required=True)
        alpha = get("model", "alpha", float, math.inf)
        try:
            rng = LongRange(phi=phi, alpha=alpha)
        except ValueError as exc:
            raise ConfigError(f"{where('model', 'phi')}: {exc}") from exc
    else:
        raise ConfigError(f"range must be 'short' or 'long', got {rng_kind!r} at {where('model', 'range')}")

    J = get("model", "J", float, 1.0)
    Delta = get("model", "Delta", float, 1.0)
    L = get("model", "L", lambda s: int(float(s)), 40_000)
    mu_raw = get("model", "mu", str, "critical").strip()
    try:
        probe = ChainModel(J=J, Delta=Delta, mu=0.0, L=L, range=rng)
    except ValueError as exc:
        raise ConfigError(f"{where('model', 'L')}: {exc}") from exc
    if mu_raw.lower() in ("critical", "mu_c"):
        mu = critical_mu(probe)
    else:
        try:
            mu = float(mu_raw)
        except ValueError as exc:
            raise ConfigError(f"bad value {mu_raw!r} for {where('model', 'mu')}") from exc
    model = replace(probe, mu=mu)

    if noncritical:
        if model.is_long_range or is_critical(model):
            raise ConfigError(f"{where('model', 'mu')}: noncritical commands need a short-range chain with mu != mu_c")
        try:
            low_energy_params(model)
        except ValueError as exc:
            raise ConfigError(f"{where('model')}: {exc} (the gapped asymptotics assume lambda1 > 0)") from exc

    try:
        bath = BathSpec(
            gamma=get("bath", "gamma", float, 0.01),
            delta=get("bath", "delta", float, 1.0),
            s=get("bath", "s", float, 1.0),
            lambda_c=get("bath", "lambda_c", float, math.inf),
        )
    except ValueError as exc:
        raise ConfigError(f"{where('bath')}: {exc}") from exc

    Ti_grid = get("protocol", "Ti_grid", parse_grid, required=True)
    vg_grid = get("protocol", "v_over_gamma_grid", parse_grid, required=True)
    eta = get("protocol", "eta", float, 1.0)
    Tf = get("protocol", "Tf", float, 0.0)
    if not eta > 0:
        raise ConfigError(f"{where('protocol', 'eta')}: eta must be positive")
    if not Tf >= 0:
        raise ConfigError(f"{where('protocol', 'Tf')}: Tf must be >= 0")
    if any(v <= 0 for v in vg_grid):
        raise ConfigError(f"{where('protocol', 'v_over_gamma_grid')}: v > 0 required")

    out = get("run", "out", lambda s: s.strip() or None)
    return RunConfig(
        model=model,
        bath=bath,
        Ti_grid=Ti_grid,
        v_over_gamma_grid=vg_grid,
        eta=eta,
        Tf=Tf,
        solver=get("run", "solver", lambda s: s.strip().lower(), "exact"),
        tol=get("run", "tol", float, 1e-8),
        workers=get("run", "workers", int, 1),
        out=out,
        samples=get("run", "samples", int, 2),
        seed=get("run", "seed", int, None),
    )


# -- sweeps ----------------------------------------------------------------


@dataclass(frozen=True)
class PointFailure:
    T_i: float
    v_over_gamma: float
    error: str
    numerical: bool


@dataclass
class SweepOutcome:
    records: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_point(model: ChainModel, bath: BathSpec, T_i: float, v_over_gamma: float, eta: float = 1.0, Tf: float = 0.0, solver: str = "exact", tol: float = 1e-8) -> SweepRecord:
    """Final excitation density of one ramp, as a :class:`SweepRecord`."""
    protocol = RampProtocol(T_i=T_i, v=v_over_gamma * bath.gamma, T_f=Tf, eta=eta)
    tags = dict(model_tag=model.tag(), bath_tag=bath.tag())
    if solver == "both":
        e_exact = evolve_all(model, bath, protocol, tol=tol, solver="exact").E_final
        e_ode = evolve_all(model, bath, protocol, tol=tol, solver="ode").E_final
        return SweepRecord(T_i, v_over_gamma, e_exact, "both", delta_E=e_ode - e_exact, **tags)
    E = evolve_all(model, bath, protocol, tol=tol, solver=solver).E_final
    return SweepRecord(T_i, v_over_gamma, E, solver, **tags)


def _point_task(args):
    model, bath, T_i, vg, eta, Tf, solver, tol = args
    try:
        return run_point(model, bath, T_i, vg, eta, Tf, solver, tol), None
    except (ValueError, NumericalError) as exc:
        return None, PointFailure(T_i, vg, f"{type(exc).__name__}: {exc}", isinstance(exc, NumericalError))


def run_sweep(cfg: RunConfig, workers: int | None = None, write: bool = True) -> SweepOutcome:
    """Evaluate every grid point; results come back in grid order.

    Failing points are collected in ``failures`` and do not stop the sweep.
    When ``cfg.out`` is set (and ``write``), the successful records are
    written there even if some points failed.
    """
    workers = cfg.workers if workers is None else workers
    tasks = [(cfg.model, cfg.bath, t, v, cfg.eta, cfg.Tf, cfg.solver, cfg.tol) for t, v in cfg.grid()]
    if workers <= 1 or len(tasks) <= 1:
        results = [_point_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_point_task, tasks))
    outcome = SweepOutcome()
    for rec, fail in results:
        if fail is None:
            outcome.records.append(rec)
        else:
            outcome.failures.append(fail)
    if write and cfg.out:
        write_csv(outcome.records, cfg.out)
    return outcome


# -- CSV -------------------------------------------------------------------


def format_float(x: float) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def write_csv(records, path) -> None:
    """Write records with the fixed header to a path or open text stream.

    A ``delta_E`` column is appended when any record carries a cross-solver
    difference.
    """
    if hasattr(path, "write"):
        _write_rows(list(records), path)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_rows(list(records), fh)


def _write_rows(records, fh):
    with_delta = any(r.delta_E is not None for r in records)
    header = list(CSV_HEADER) + (["delta_E"] if with_delta else [])
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in records:
        row = [format_float(r.T_i), format_float(r.v_over_gamma), format_float(r.E_final), r.solver, r.model_tag, r.bath_tag]
        if with_delta:
            row.append("" if r.delta_E is None else format_float(r.delta_E))
        w.writerow(row)


def read_csv(path) -> list:
    """Inverse of :func:`write_csv`."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError("row 1: missing header")
    header = tuple(rows[0])
    with_delta = header == CSV_HEADER + ("delta_E",)
    if header != CSV_HEADER and not with_delta:
        raise CsvFormatError(f"row 1: unexpected header {','.join(header)}")
    out = []
    for no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise CsvFormatError(f"row {no}: expected {len(header)} fields, got {len(row)}")
        try:
            T_i, vg, E = float(row[0]), float(row[1]), float(row[2])
            delta = float(row[6]) if with_delta and row[6] != "" else None
        except ValueError as exc:
            raise CsvFormatError(f"row {no}: {exc}") from exc
        try:
            out.append(SweepRecord(T_i, vg, E, row[3], row[4], row[5], delta_E=delta))
        except ValueError as exc:
            raise CsvFormatError(f"row {no}: {exc}") from exc
    return out
