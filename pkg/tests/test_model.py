import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kitaev_cooling import model as M
from kitaev_cooling.model import ChainModel, LongRange

from oracles.generate import brute_force_bdg
from reference_values import THERMAL_DENSITY_T1


def test_mode_grid_small():
    assert np.allclose(sorted(M.mode_grid(ChainModel(L=4))), [-np.pi / 2, 0, np.pi / 2, np.pi])
    assert np.allclose(M.mode_grid(ChainModel(L=2)), [0, np.pi])


@pytest.mark.parametrize("L", [2, 4, 10, 1000])
def test_mode_grid_cardinality_and_symmetry(L):
    k = M.mode_grid(ChainModel(L=L))
    assert k.size == L
    assert k.min() > -np.pi and k.max() == pytest.approx(np.pi)
    inner = np.sort(k[np.abs(k) < np.pi - 1e-12])
    assert np.allclose(inner, -inner[::-1])


@pytest.mark.parametrize("L", [1, 3, 0, 7])
def test_chain_rejects_bad_length(L):
    with pytest.raises(ValueError):
        ChainModel(L=L)


def test_long_range_rejects_small_exponents():
    with pytest.raises(ValueError):
        LongRange(phi=1.0)
    with pytest.raises(ValueError):
        LongRange(phi=1.5, alpha=0.5)


def test_mode_energy_examples():
    m = ChainModel(J=1, Delta=1, mu=-1)
    assert M.mode_energy(m, 0.0) == 0.0
    assert M.mode_energy(m, np.pi) == pytest.approx(4.0, abs=1e-14)
    assert M.mode_energy(m, 1e-6) == pytest.approx(1e-6, rel=1e-6)
    gapped = ChainModel(J=1, Delta=1, mu=-1.2)
    assert M.mode_energy(gapped, 0.0) == pytest.approx(0.4, abs=1e-14)


def test_mode_energy_rejects_outside_zone():
    with pytest.raises(ValueError):
        M.mode_energy(ChainModel(), 3.2)


@pytest.mark.parametrize("L", [6, 10, 16])
@pytest.mark.parametrize("mu", [-1.0, -1.3, 0.4])
def test_short_range_matches_brute_force_diagonalisation(L, mu):
    m = ChainModel(J=1.0, Delta=0.7, mu=mu, L=L)
    lam = np.sort(np.repeat(M.grid_energies(m), 2))
    assert np.allclose(lam, brute_force_bdg(L, 1.0, 0.7, mu), atol=1e-12)


@pytest.mark.parametrize("phi,alpha", [(1.5, math.inf), (1.8, 1.6), (3.0, 2.5)])
def test_long_range_matches_brute_force_diagonalisation(phi, alpha):
    L = 12
    m = ChainModel(J=1.0, Delta=1.0, mu=-1.1, L=L, range=LongRange(phi, alpha))
    lam = np.sort(np.repeat(M.grid_energies(m), 2))
    assert np.allclose(lam, brute_force_bdg(L, 1.0, 1.0, -1.1, phi, alpha), atol=1e-12)


@pytest.mark.parametrize("phi,alpha", [(1.5, math.inf), (1.7, 1.3), (2.5, 3.5)])
def test_fft_grid_equals_direct_sums(phi, alpha):
    m = ChainModel(mu=-1.3, L=64, range=LongRange(phi, alpha))
    direct = M.mode_energy(m, M.mode_grid(m))
    assert np.allclose(M.grid_energies(m), direct, rtol=1e-12, atol=1e-13)


def test_grid_energies_read_only():
    lam = M.grid_energies(ChainModel(L=10))
    with pytest.raises(ValueError):
        lam[0] = 1.0


def test_low_energy_params_examples():
    p = M.low_energy_params(ChainModel(J=1, Delta=1, mu=-1.2))
    assert p.lambda0 == pytest.approx(0.4)
    assert p.lambda1 == pytest.approx(2.25)
    p = M.low_energy_params(ChainModel(J=1, Delta=1, mu=-1))
    assert (p.c, p.z, p.lambda0) == (1.0, 1.0, 0.0)
    probe = ChainModel(L=1000, range=LongRange(1.5))
    p = M.low_energy_params(replace(probe, mu=M.critical_mu(probe)))
    assert p.z == pytest.approx(0.5)
    probe = ChainModel(L=1000, range=LongRange(2.5))
    assert M.low_energy_params(replace(probe, mu=M.critical_mu(probe))).z == pytest.approx(1.0)


def test_low_energy_params_flags_nonpositive_curvature():
    # Delta^2 - 4 J (mu + J) <= 0
    with pytest.raises(ValueError, match="lambda1"):
        M.low_energy_params(ChainModel(J=1, Delta=1, mu=-0.5))


def test_critical_mu_examples():
    assert M.critical_mu(ChainModel(J=1)) == -1.0
    assert M.critical_mu(ChainModel(range=LongRange(2.0))) == pytest.approx(-math.pi**2 / 6, abs=1e-12)
    assert M.critical_mu(ChainModel(range=LongRange(60.0))) == pytest.approx(-1.0, abs=1e-15)


def test_zeta_against_mpmath():
    import mpmath

    for s in (1.1, 1.5, 1.75, 1.9, 3.0):
        assert M.riemann_zeta(s) == pytest.approx(float(mpmath.zeta(s)), rel=1e-12)


def test_fermi_dirac_examples():
    assert M.fermi_dirac(0.0) == 0.5
    assert M.fermi_dirac(math.inf) == 0.0
    assert M.fermi_dirac(math.log(3)) == pytest.approx(0.25, abs=1e-16)
    assert M.fermi_dirac(-1e4) == 1.0
    assert M.fermi_dirac(1e4) == 0.0


@given(st.floats(-700, 700), st.floats(0, 50))
def test_fermi_dirac_symmetry_and_monotonicity(x, d):
    assert M.fermi_dirac(x) + M.fermi_dirac(-x) == pytest.approx(1.0, abs=1e-15)
    assert M.fermi_dirac(x + d) <= M.fermi_dirac(x)


def test_thermal_density_limits():
    assert M.thermal_excitation_density(ChainModel(mu=-1.2, L=100), 0.0) == 0.0
    assert M.thermal_excitation_density(ChainModel(L=100), 0.0) == 0.0
    assert M.thermal_excitation_density(ChainModel(L=100), 1e12) == pytest.approx(0.5, abs=1e-11)
    with pytest.raises(ValueError):
        M.thermal_excitation_density(ChainModel(L=100), -1.0)


def test_thermal_density_against_k_integral():
    # the grid sum is a trapezoid rule; the |k| kink at the gapless point
    # leaves an O(1/L^2) error
    errs = {L: M.thermal_excitation_density(ChainModel(L=L), 1.0) - THERMAL_DENSITY_T1 for L in (100, 1000, 40_000)}
    assert abs(errs[40_000]) < 1e-9
    assert errs[100] / errs[1000] == pytest.approx(100.0, rel=0.01)


def test_critical_dispersion_linear_at_small_k():
    m = ChainModel(J=1, Delta=1.3, mu=-1)
    k = np.geomspace(1e-4, 1e-2, 20)
    slope, icpt = np.polyfit(np.log(k), np.log(M.mode_energy(m, k)), 1)
    assert slope == pytest.approx(1.0, abs=0.01)
    assert math.exp(icpt) == pytest.approx(1.3, rel=0.01)


def test_gapped_dispersion_quartic_remainder():
    m = ChainModel(J=1, Delta=1, mu=-1.2)
    p = M.low_energy_params(m)
    rem = lambda k: M.mode_energy(m, k) - (p.lambda0 + p.lambda1 * k * k)
    ratios = [rem(k) / rem(k / 2) for k in (0.04, 0.02, 0.01)]
    # O(k^4): halving k divides the remainder by 16
    for r in ratios:
        assert r == pytest.approx(16.0, rel=0.02)


@settings(max_examples=60)
@given(st.floats(-np.pi, np.pi), st.floats(-2, 2), st.floats(0.1, 2))
def test_energy_even_and_nonnegative(k, mu, delta):
    m = ChainModel(J=1.0, Delta=delta, mu=mu)
    assert M.mode_energy(m, k) >= 0
    assert M.mode_energy(m, k) == pytest.approx(M.mode_energy(m, -k), abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(1.2, 3.0))
def test_long_range_energy_even(k, phi):
    m = ChainModel(mu=-1.3, L=200, range=LongRange(phi, phi + 0.3))
    assert M.mode_energy(m, k) == pytest.approx(M.mode_energy(m, -k), abs=1e-12)


def test_long_range_converges_to_short_range():
    k = np.linspace(-np.pi, np.pi, 41)
    sr = ChainModel(mu=-1.3, L=400)
    lr = replace(sr, range=LongRange(20.0, 20.0))
    assert np.allclose(M.mode_energy(lr, k), M.mode_energy(sr, k), rtol=1e-4)
