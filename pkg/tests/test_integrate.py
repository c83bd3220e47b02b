import math

import numpy as np
import pytest

from kitaev_cooling.integrate import StepSizeUnderflow, dopri5, dopri5_batch


def test_scalar_decay_matches_exponential():
    ts, ys = dopri5(lambda t, y: -2.0 * y + math.sin(t), 0.0, 1.0, 5.0, tol=1e-11, t_eval=[0.0, 1.0, 5.0])
    exact = lambda t: (2 * math.sin(t) - math.cos(t)) / 5 + 1.2 * math.exp(-2 * t)
    assert np.allclose(ys, [exact(t) for t in ts], atol=1e-9)


def test_scalar_validation():
    with pytest.raises(ValueError):
        dopri5(lambda t, y: y, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        dopri5(lambda t, y: y, 0.0, 0.0, 1.0, tol=0)


def test_scalar_underflow_names_time():
    # finite-time blow up at t = 1
    with pytest.raises(StepSizeUnderflow) as info:
        dopri5(lambda t, y: y * y, 0.0, 1.0, 2.0, tol=1e-8, context="probe")
    assert 0.9 < info.value.t < 1.0 + 1e-6
    assert "probe" in str(info.value)


def test_batch_matches_closed_form():
    rates = np.array([0.1, 1.0, 10.0, 50.0])

    def fun(t, y, idx):
        return -rates[idx] * (y - np.cos(t))

    y, _ = dopri5_batch(fun, 0.0, np.zeros(4), 3.0, tol=1e-11)
    g = rates
    exact = g * (g * np.cos(3.0) + np.sin(3.0)) / (g * g + 1) - g * g / (g * g + 1) * np.exp(-3.0 * g)
    assert np.allclose(y, exact, atol=1e-8)


def test_batch_independent_of_grouping():
    rates = np.geomspace(0.01, 100, 9)

    def fun(t, y, idx):
        return -rates[idx] * y + np.exp(-t)

    whole, _ = dopri5_batch(fun, 0.0, np.ones(9), 2.0, tol=1e-9)
    for i in range(9):
        one, _ = dopri5_batch(lambda t, y, idx, i=i: fun(t, y, np.full_like(idx, i)), 0.0, np.ones(1), 2.0, tol=1e-9)
        assert one[0] == whole[i]
