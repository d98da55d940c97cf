import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floqstab.experiments.fitting import FitError, damped_sine_model, fit_exponential


def test_recovers_synthetic_exponential():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 20, 200)
    y = 0.5 * np.exp(-t / 3) + 0.5 + 1e-3 * rng.normal(size=t.size)
    res = fit_exponential(t, y)
    assert abs(res.T - 3) < 0.1
    assert abs(res.params["C"] - 0.5) < 0.01
    assert res.errors["T"] < 0.1
    assert res.residual_norm < 0.05
    assert set(res.to_dict()) == {"model", "params", "errors", "residual_norm"}


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 5.0), st.floats(-1.0, 1.0).filter(lambda a: abs(a) > 0.05), st.floats(-1, 1))
def test_noise_free_exponentials_exact(T, A, C):
    t = np.linspace(0, 6 * T, 60)
    res = fit_exponential(t, A * np.exp(-t / T) + C)
    assert abs(res.T - T) < 1e-5 * T
    assert np.abs(res.evaluate(t) - (A * np.exp(-t / T) + C)).max() < 1e-6


def test_constant_series_is_unidentifiable():
    with pytest.raises(FitError):
        fit_exponential(np.arange(10.0), np.full(10, 0.3))


def test_needs_five_samples():
    with pytest.raises(ValueError):
        fit_exponential(np.arange(4.0), np.arange(4.0))
    with pytest.raises(ValueError):
        fit_exponential(np.arange(5.0), np.arange(5.0), model="power")


def test_growth_is_rejected():
    t = np.linspace(0, 5, 40)
    with pytest.raises(FitError):
        fit_exponential(t, np.exp(t / 2))


def test_time_constant_beyond_window_is_rejected():
    t = np.linspace(0, 1, 40)
    with pytest.raises(FitError):
        fit_exponential(t, 1 - 1e-3 * t)


def test_damped_sine():
    t = np.linspace(0, 30, 600)
    y = damped_sine_model(t, 0.4, 8.0, 1.3, 0.2, 0.5)
    res = fit_exponential(t, y, model="damped_sine")
    assert abs(res.T - 8.0) < 1e-3
    assert abs(res.params["w"] - 1.3) < 1e-3
