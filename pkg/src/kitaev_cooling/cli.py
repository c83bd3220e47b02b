"""Command line interface: ``kitaev-cooling <subcommand> [options]``.

Exit status is 0 on success, 1 for invalid input (bad flags, config or
values) and 2 when a numerical solver fails.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace

from . import analytic, scaling
from .bath import BathSpec
from .errors import NumericalError
from .figures import FIGURES, figure_preset
from .model import ChainModel, is_critical, low_energy_params, thermal_excitation_density
from .ramp import RampProtocol, evolve_all
from .sweep import RunConfig, format_float, parse_config, read_csv, run_sweep, write_csv

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _default_config() -> RunConfig:
    return RunConfig(
        model=ChainModel(),
        bath=BathSpec(),
        Ti_grid=(15.0,),
        v_over_gamma_grid=(0.081, 0.81, 8.1, 81.0),
    )


def _load(args, noncritical=False) -> RunConfig:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read(), noncritical=noncritical)
    else:
        cfg = _default_config()
    over = {}
    if getattr(args, "solver", None):
        over["solver"] = args.solver
    if getattr(args, "workers", None):
        over["workers"] = args.workers
    if getattr(args, "out", None):
        over["out"] = args.out
    if getattr(args, "Ti", None) is not None:
        over["Ti_grid"] = (args.Ti,)
    if getattr(args, "v_over_gamma", None) is not None:
        over["v_over_gamma_grid"] = (args.v_over_gamma,)
    if getattr(args, "scale", None) is not None and args.scale != 1.0:
        from .figures import scaled_length

        over["model"] = replace(cfg.model, L=scaled_length(cfg.model.L, args.scale))
    return replace(cfg, **over) if over else cfg


def _writer(path):
    fh = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    return fh, csv.writer(fh, lineterminator="\n")


def _crossover_line(cfg: RunConfig, vg: float):
    if not is_critical(cfg.model):
        return None
    try:
        return analytic.crossover_Ti(cfg.bath, cfg.model, vg)
    except (ValueError, NumericalError):
        return None


# -- subcommands -----------------------------------------------------------


def cmd_simulate(args):
    cfg = _load(args)
    solver = cfg.solver if cfg.solver != "both" else "exact"
    if cfg.eta != 1 and solver == "exact":
        solver = "ode"
    fh, w = _writer(args.out)
    try:
        w.writerow(["T_i", "v_over_gamma", "T", "E", "E_th"])
        for T_i, vg in cfg.grid():
            protocol = RampProtocol(T_i=T_i, v=vg * cfg.bath.gamma, T_f=cfg.Tf, eta=cfg.eta)
            traj = evolve_all(cfg.model, cfg.bath, protocol, tol=cfg.tol, samples=args.samples, solver=solver)
            for T, E in zip(traj.temperatures, traj.E):
                w.writerow([format_float(T_i), format_float(vg), format_float(T), format_float(E), format_float(thermal_excitation_density(cfg.model, T))])
            cross = _crossover_line(cfg, vg)
            if cross is not None:
                print(f"# v/gamma={vg:g}: analytic crossover temperature {cross:.6g}", file=sys.stderr)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_sweep(args):
    cfg = _load(args)
    outcome = run_sweep(cfg)
    if not cfg.out:
        _emit_records(outcome.records)
    for f in outcome.failures:
        print(f"failed at T_i={f.T_i:g}, v/gamma={f.v_over_gamma:g}: {f.error}", file=sys.stderr)
    if outcome.failures:
        return 2 if any(f.numerical for f in outcome.failures) else 1
    return 0


def _emit_records(records):
    write_csv(records, sys.stdout)


def _collapse(records, kind, z, s, crossover):
    if kind == "Ti":
        return scaling.rescale_Ti_collapse(records, z, s, crossover)
    return scaling.rescale_v_collapse(records, z, s, crossover)


def _write_collapse(ds, path, tag=""):
    fh, w = _writer(path)
    try:
        w.writerow(["family", "X", "Y", "model_tag"])
        for f in ds.families:
            for x, y in zip(f.x, f.y):
                w.writerow([format_float(f.key), format_float(x), format_float(y), tag])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _params_from_args(args):
    bath = BathSpec(delta=args.delta, s=args.s)
    return bath, args.z, args.c


def cmd_collapse(args):
    records = read_csv(args.input)
    bath, z, c = _params_from_args(args)
    cross = analytic.crossover_scaled(bath, c, z)
    ds = _collapse(records, args.kind, z, bath.s, cross)
    _write_collapse(ds, args.out)
    print(f"collapse_quality {scaling.collapse_quality(ds):.6g}", file=sys.stdout if args.out else sys.stderr)
    return 0


def cmd_asymptotes(args):
    if args.input:
        records = read_csv(args.input)
        bath, z, c = _params_from_args(args)
        cross = analytic.crossover_scaled(bath, c, z)
        ds = _collapse(records, args.kind, z, bath.s, cross)
        for regime in ("low", "high"):
            try:
                fit = scaling.fit_asymptote(ds, regime)
            except ValueError as exc:
                print(f"{regime}: {exc}")
                continue
            print(f"{regime}: exponent {fit.exponent:.6g} +- {fit.stderr:.2g}, prefactor {fit.prefactor:.6g}, points {fit.n_points}")
        return 0
    cfg = _load(args, noncritical=True)
    params = low_energy_params(cfg.model)
    print(f"lambda0 {params.lambda0:.12g}")
    print(f"lambda1 {params.lambda1:.12g}")
    fh, w = _writer(args.out)
    try:
        w.writerow(["T_i", "v_over_gamma", "E_lowTi", "E_smallv"])
        for T_i, vg in cfg.grid():
            w.writerow([
                format_float(T_i),
                format_float(vg),
                format_float(analytic.noncritical_lowTi(cfg.model, T_i)),
                format_float(analytic.noncritical_smallv(cfg.model, cfg.bath, vg)),
            ])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def cmd_constants(args):
    cfg = _load(args)
    params = low_energy_params(cfg.model)
    if params.lambda0 != 0:
        raise ValueError("constants are defined for a critical model (mu = mu_c)")
    c, z = params.c, params.z
    c1 = analytic.c1_constant(cfg.bath, z, c)
    c2 = analytic.c2_constant(method="quad", c=c, z=z)
    tilde = (c1 / c2) ** z
    print(f"z {z:.12g}")
    print(f"c {c:.12g}")
    print(f"c1 {c1:.10g}")
    print(f"|Delta|c1 {abs(cfg.model.Delta) * c1:.10g}")
    print(f"c2 {c2:.10g}")
    print(f"c2_closed {analytic.c2_constant(method='closed', c=c, z=z):.10g}")
    print(f"crossover_coefficient {tilde:.10g}")
    for vg in cfg.v_over_gamma_grid:
        print(f"T_i* (v/gamma={vg:g}) {tilde * vg ** (1.0 / (cfg.bath.s + 1.0)):.10g}")
    return 0


def cmd_figure(args):
    preset = figure_preset(args.name, args.scale)
    workers = args.workers or 1
    out = args.out
    if preset.kind == "trajectory":
        cfg = preset.configs[0]
        fh, w = _writer(out)
        try:
            w.writerow(["v_over_gamma", "T", "E", "E_th"])
            for vg in cfg.v_over_gamma_grid:
                protocol = RampProtocol(T_i=cfg.Ti_grid[0], v=vg * cfg.bath.gamma)
                traj = evolve_all(cfg.model, cfg.bath, protocol, samples=preset.samples)
                for T, E in zip(traj.temperatures, traj.E):
                    w.writerow([format_float(vg), format_float(T), format_float(E), format_float(thermal_excitation_density(cfg.model, T))])
                print(f"# v/gamma={vg:g}: crossover {analytic.crossover_Ti(cfg.bath, cfg.model, vg):.6g}", file=sys.stderr)
        finally:
            if fh is not sys.stdout:
                fh.close()
        return 0

    records, failures = [], []
    for cfg in preset.configs:
        res = run_sweep(replace(cfg, workers=workers, out=None), write=False)
        records.extend(res.records)
        failures.extend(res.failures)
    for f in failures:
        print(f"failed at T_i={f.T_i:g}, v/gamma={f.v_over_gamma:g}: {f.error}", file=sys.stderr)

    if preset.kind.startswith("collapse"):
        kind = "Ti" if preset.kind == "collapse_Ti" else "v"
        fh, w = _writer(out)
        try:
            w.writerow(["family", "X", "Y", "model_tag"])
            for cfg in preset.configs:
                recs = [r for r in records if r.model_tag == cfg.model.tag()]
                if not recs:
                    continue
                p = low_energy_params(cfg.model)
                cross = analytic.crossover_scaled(cfg.bath, p.c, p.z)
                ds = _collapse(recs, kind, p.z, cfg.bath.s, cross)
                for f in ds.families:
                    for x, y in zip(f.x, f.y):
                        w.writerow([format_float(f.key), format_float(x), format_float(y), cfg.model.tag()])
                q = scaling.collapse_quality(ds) if len(ds.families) > 1 else 0.0
                print(f"collapse_quality {q:.6g} {cfg.model.tag()}", file=sys.stderr if out is None else sys.stdout)
        finally:
            if fh is not sys.stdout:
                fh.close()
    else:
        if out:
            write_csv(records, out)
        else:
            _emit_records(records)
        if preset.kind.startswith("noncritical"):
            for cfg in preset.configs:
                if is_critical(cfg.model):
                    continue
                recs = [r for r in records if r.model_tag == cfg.model.tag()]
                if preset.kind == "noncritical_Ti":
                    pred = [analytic.noncritical_lowTi(cfg.model, r.T_i) for r in recs]
                else:
                    pred = [analytic.noncritical_smallv(cfg.model, cfg.bath, r.v_over_gamma) for r in recs]
                ok = [(r, p) for r, p in zip(recs, pred) if r.E_final >= 1e-12 and p > 0]
                if ok:
                    r, p = ok[0]
                    print(f"mu={cfg.model.mu:g}: E/asymptote {r.E_final / p:.6g} at T_i={r.T_i:g}, v/gamma={r.v_over_gamma:g}", file=sys.stderr)
    if failures:
        return 2 if any(f.numerical for f in failures) else 1
    return 0


# -- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kitaev-cooling", description="Cooling ramps of Kitaev chains coupled to thermal baths.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, solver=True):
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--scale", type=float, default=1.0, metavar="F")
        sp.add_argument("--workers", type=int, metavar="N")
        sp.add_argument("--out", metavar="PATH")
        if solver:
            sp.add_argument("--solver", choices=("ode", "exact", "both"))

    sp = sub.add_parser("simulate", help="one ramp per grid point; E(T) trajectory CSV")
    common(sp)
    sp.add_argument("--Ti", type=float)
    sp.add_argument("--v-over-gamma", dest="v_over_gamma", type=float)
    sp.add_argument("--samples", type=int, default=101)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="final E over the (T_i, v/gamma) grid")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    def collapse_args(sp):
        sp.add_argument("--input", metavar="CSV")
        sp.add_argument("--kind", choices=("Ti", "v"), default="Ti")
        sp.add_argument("--z", type=float, default=1.0)
        sp.add_argument("--s", type=float, default=1.0)
        sp.add_argument("--delta", type=float, default=1.0)
        sp.add_argument("--c", type=float, default=1.0)

    sp = sub.add_parser("collapse", help="rescale sweep records and report collapse quality")
    common(sp, solver=False)
    collapse_args(sp)
    sp.set_defaults(func=cmd_collapse)

    sp = sub.add_parser("asymptotes", help="fit asymptotes of collapsed records, or gapped-chain formulas")
    common(sp, solver=False)
    collapse_args(sp)
    sp.set_defaults(func=cmd_asymptotes)

    sp = sub.add_parser("constants", help="c1, c2 and the crossover for the configured model")
    common(sp, solver=False)
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("figure", help="run a built-in figure preset")
    sp.add_argument("name", choices=FIGURES)
    common(sp, solver=False)
    sp.set_defaults(func=cmd_figure)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "collapse" and not args.input:
            raise ValueError("collapse needs --input CSV")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
