import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kitaev_cooling import sweep as S
from kitaev_cooling.bath import BathSpec
from kitaev_cooling.errors import NumericalError
from kitaev_cooling.model import ChainModel
from kitaev_cooling.ramp import RampProtocol, evolve_all
from kitaev_cooling.scaling import SweepRecord

FIG2B = """\
[model]
J = 1
Delta = 1
mu = -1
L = 40000

[bath]
gamma = 0.01
delta = 1

[protocol]
Ti_grid = geom(0.01, 100, 33)
v_over_gamma_grid = 0.081, 0.81, 8.1, 81
"""


def _small(**run):
    text = FIG2B.replace("L = 40000", "L = 200").replace("geom(0.01, 100, 33)", "0.5, 2")
    text = text.replace("0.081, 0.81, 8.1, 81", "0.1, 5")
    if run:
        text += "\n[run]\n" + "\n".join(f"{k} = {v}" for k, v in run.items()) + "\n"
    return S.parse_config(text)


# -- config ----------------------------------------------------------------


def test_config_echoes_figure_parameters():
    cfg = S.parse_config(FIG2B)
    m = cfg.model
    assert (m.L, m.J, m.Delta, m.mu) == (40_000, 1.0, 1.0, -1.0)
    assert cfg.bath.delta == 1.0 and cfg.bath.s == 1.0
    assert cfg.v_over_gamma_grid == (0.081, 0.81, 8.1, 81.0)
    assert len(cfg.Ti_grid) == 33
    assert cfg.Ti_grid[0] == pytest.approx(0.01) and cfg.Ti_grid[-1] == pytest.approx(100.0)
    assert (cfg.solver, cfg.tol, cfg.workers, cfg.out) == ("exact", 1e-8, 1, None)


def test_missing_bath_section_is_named():
    text = FIG2B.replace("[bath]\ngamma = 0.01\ndelta = 1\n", "")
    with pytest.raises(S.ConfigError, match=r"\[bath\]"):
        S.parse_config(text)


def test_unknown_key_reports_line():
    text = FIG2B.replace("delta = 1", "delta = 1\ngama = 0.02")
    with pytest.raises(S.ConfigError, match=r"gama \(line 10\)"):
        S.parse_config(text)
    with pytest.raises(S.ConfigError, match="unknown section"):
        S.parse_config(FIG2B + "[extra]\nx = 1\n")


def test_bad_values_are_config_errors():
    with pytest.raises(S.ConfigError, match="Delta"):
        S.parse_config(FIG2B.replace("Delta = 1", "Delta = one"))
    with pytest.raises(S.ConfigError, match="v > 0"):
        S.parse_config(FIG2B.replace("0.081, 0.81", "0, 0.81"))
    with pytest.raises(S.ConfigError, match="tol"):
        _small(tol=0)
    with pytest.raises(S.ConfigError, match="solver"):
        _small(solver="rk4")
    with pytest.raises(S.ConfigError, match="L"):
        S.parse_config(FIG2B.replace("L = 40000", "L = 41"))
    with pytest.raises(S.ConfigError):
        S.parse_config(FIG2B.replace("[model]", "[model]\nphi = 1.5"))


def test_critical_mu_keyword_and_long_range():
    text = FIG2B.replace("mu = -1", "mu = critical\nrange = long\nphi = 2")
    m = S.parse_config(text).model
    assert m.mu == pytest.approx(-math.pi**2 / 6, abs=1e-12)
    assert m.range.phi == 2.0


def test_noncritical_commands_need_positive_lambda1():
    with pytest.raises(S.ConfigError, match="lambda1 > 0"):
        S.parse_config(FIG2B.replace("mu = -1", "mu = -0.5"), noncritical=True)
    with pytest.raises(S.ConfigError, match="mu"):
        S.parse_config(FIG2B, noncritical=True)
    assert S.parse_config(FIG2B.replace("mu = -1", "mu = -1.2"), noncritical=True).model.mu == -1.2


def test_parse_grid_forms():
    assert S.parse_grid("0.1, 1,10") == (0.1, 1.0, 10.0)
    assert S.parse_grid("lin(0, 1, 3)") == (0.0, 0.5, 1.0)
    g = S.parse_grid("geom(1e-3, 1e3, 7)")
    assert np.allclose(g, np.logspace(-3, 3, 7))
    for bad in ("", "geom(0, 1, 3)", "geom(1, 2, 0)", "a, b"):
        with pytest.raises(ValueError):
            S.parse_grid(bad)


# -- CSV -------------------------------------------------------------------


def _random_records(n, seed=3):
    rng = np.random.default_rng(seed)
    return [
        SweepRecord(float(t), float(v), float(e), "exact", "SR;J=1;Delta=1;mu=-1;L=40000", "gamma=0.01")
        for t, v, e in zip(10 ** rng.uniform(-2, 2, n), 10 ** rng.uniform(-3, 3, n), rng.uniform(0, 0.5, n))
    ]


def test_csv_round_trip_is_bit_identical(tmp_path):
    recs = _random_records(100)
    path = tmp_path / "r.csv"
    S.write_csv(recs, path)
    back = S.read_csv(path)
    assert back == recs
    assert path.read_text().splitlines()[0] == ",".join(S.CSV_HEADER)


@settings(max_examples=200)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(S.format_float(x)) == x


def test_empty_record_list_gives_header_only(tmp_path):
    path = tmp_path / "e.csv"
    S.write_csv([], path)
    assert path.read_text() == ",".join(S.CSV_HEADER) + "\n"
    assert S.read_csv(path) == []


def test_non_numeric_energy_reports_row(tmp_path):
    path = tmp_path / "bad.csv"
    S.write_csv(_random_records(3), path)
    lines = path.read_text().splitlines()
    fields = lines[2].split(",")
    fields[2] = "abc"
    lines[2] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(S.CsvFormatError, match="row 3"):
        S.read_csv(path)


def test_malformed_files(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("")
    with pytest.raises(S.CsvFormatError, match="row 1"):
        S.read_csv(path)
    path.write_text("a,b\n")
    with pytest.raises(S.CsvFormatError, match="header"):
        S.read_csv(path)
    path.write_text(",".join(S.CSV_HEADER) + "\n1,2\n")
    with pytest.raises(S.CsvFormatError, match="row 2"):
        S.read_csv(path)


def test_delta_column_round_trip(tmp_path):
    recs = [SweepRecord(1.0, 2.0, 0.01, "both", "m", "b", delta_E=3e-9), SweepRecord(2.0, 2.0, 0.02, "both", "m", "b", delta_E=-1e-10)]
    path = tmp_path / "d.csv"
    S.write_csv(recs, path)
    assert path.read_text().splitlines()[0].endswith(",delta_E")
    assert S.read_csv(path) == recs


# -- sweeps ----------------------------------------------------------------


def test_single_point_sweep_equals_direct_call():
    cfg = _small()
    cfg = S.RunConfig(model=cfg.model, bath=cfg.bath, Ti_grid=(2.0,), v_over_gamma_grid=(5.0,))
    out = S.run_sweep(cfg)
    assert out.ok and len(out.records) == 1
    direct = evolve_all(cfg.model, cfg.bath, RampProtocol(T_i=2.0, v=5.0 * cfg.bath.gamma)).E_final
    rec = out.records[0]
    assert rec.E_final == direct
    assert (rec.T_i, rec.v_over_gamma, rec.solver) == (2.0, 5.0, "exact")
    assert rec.model_tag == cfg.model.tag() and rec.bath_tag == cfg.bath.tag()


def test_grid_order_is_fixed():
    cfg = _small()
    out = S.run_sweep(cfg)
    assert [(r.T_i, r.v_over_gamma) for r in out.records] == [(0.5, 0.1), (2.0, 0.1), (0.5, 5.0), (2.0, 5.0)]


def test_both_solvers_agree_per_record():
    out = S.run_sweep(_small(solver="both"))
    assert out.ok and len(out.records) == 4
    for r in out.records:
        assert r.solver == "both"
        assert abs(r.delta_E) <= 1e-6


def test_workers_give_byte_identical_csv(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    S.write_csv(S.run_sweep(_small(), workers=1).records, a)
    S.write_csv(S.run_sweep(_small(), workers=2).records, b)
    assert a.read_bytes() == b.read_bytes()


def test_partial_failures_are_reported_and_persisted(tmp_path, monkeypatch):
    real = S.run_point

    def flaky(model, bath, T_i, vg, *args):
        if (T_i, vg) == (2.0, 0.1):
            raise NumericalError("step size underflow")
        if (T_i, vg) == (0.5, 5.0):
            raise ValueError("bad point")
        return real(model, bath, T_i, vg, *args)

    monkeypatch.setattr(S, "run_point", flaky)
    path = tmp_path / "p.csv"
    out = S.run_sweep(_small(out=str(path)))
    assert not out.ok
    assert [(f.T_i, f.v_over_gamma, f.numerical) for f in out.failures] == [(2.0, 0.1, True), (0.5, 5.0, False)]
    assert "underflow" in out.failures[0].error
    saved = S.read_csv(path)
    assert [(r.T_i, r.v_over_gamma) for r in saved] == [(0.5, 0.1), (2.0, 5.0)]


def test_power_law_ramps_need_ode():
    with pytest.raises(S.ConfigError, match="eta"):
        S.parse_config(FIG2B.replace("v_over_gamma_grid", "eta = 2\nv_over_gamma_grid"))
    cfg = S.parse_config(FIG2B.replace("v_over_gamma_grid", "eta = 2\nv_over_gamma_grid") + "[run]\nsolver = ode\n")
    assert cfg.eta == 2.0


def test_run_point_with_long_range_model():
    from dataclasses import replace

    from kitaev_cooling.model import LongRange, critical_mu

    probe = ChainModel(L=200, range=LongRange(1.75))
    m = replace(probe, mu=critical_mu(probe))
    rec = S.run_point(m, BathSpec(), 1.0, 1.0)
    assert 0 < rec.E_final < 0.5
    assert rec.model_tag.startswith("LR(phi=1.75")
