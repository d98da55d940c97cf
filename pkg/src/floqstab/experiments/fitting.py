"""Exponential and damped-sinusoid fits to relaxation traces."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

FIT_MODELS = ("exponential", "damped_sine")
MAX_SPAN_RATIO = 10.0     # a longer T is not constrained by the data


class FitError(RuntimeError):
    """The fit did not converge or returned an unphysical time constant."""


def exp_model(t, A, T, C):
    return A * np.exp(-t / T) + C


def damped_sine_model(t, A, T, w, phi, C):
    return A * np.exp(-t / T) * np.sin(w * t + phi) + C


@dataclass(frozen=True)
class FitResult:
    model: str
    params: dict
    errors: dict = field(default_factory=dict)   # one-sigma
    residual_norm: float = 0.0

    @property
    def T(self) -> float:
        return self.params["T"]

    def evaluate(self, t):
        p = self.params
        if self.model == "exponential":
            return exp_model(np.asarray(t), p["A"], p["T"], p["C"])
        return damped_sine_model(np.asarray(t), p["A"], p["T"], p["w"], p["phi"], p["C"])

    def to_dict(self) -> dict:
        return {"model": self.model, "params": self.params, "errors": self.errors,
                "residual_norm": self.residual_norm}


def _initial_exponential(t, y):
    n_tail = max(1, len(y) // 10)
    y_inf = float(np.mean(y[-n_tail:]))
    dev = y - y_inf
    mask = np.abs(dev) > 1e-3 * max(np.abs(dev).max(), 1e-300)
    mask[-n_tail:] = False
    if mask.sum() < 2:
        raise FitError("no decaying component: time constant is unidentifiable")
    slope, icpt = np.polyfit(t[mask], np.log(np.abs(dev[mask])), 1)
    T0 = -1.0 / slope if slope < 0 else (t[-1] - t[0])
    A0 = np.sign(dev[mask][0]) * np.exp(icpt)
    return A0, T0, y_inf


def fit_exponential(t, y, model: str = "exponential", maxfev: int = 5000) -> FitResult:
    """Least-squares fit of ``A exp(-t/T) + C`` (or the damped sinusoid).

    Starting values come from a straight-line fit of ``log|y - y_inf|``, with
    ``y_inf`` the mean of the last tenth of the samples.
    """
    if model not in FIT_MODELS:
        raise ValueError(f"unknown fit model {model!r}")
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.size < 5:
        raise ValueError("need at least 5 (t, y) samples of equal length")
    if np.ptp(y) == 0:
        raise FitError("constant series: time constant is unidentifiable")
    A0, T0, C0 = _initial_exponential(t, y)
    span = t[-1] - t[0]
    try:
        if model == "exponential":
            p, cov = curve_fit(exp_model, t, y, p0=[A0, T0, C0], maxfev=maxfev)
            names = ("A", "T", "C")
        else:
            resid = y - exp_model(t, A0, T0, C0)
            spec = np.abs(np.fft.rfft(resid - resid.mean()))
            freqs = 2 * np.pi * np.fft.rfftfreq(len(t), d=span / (len(t) - 1))
            w0 = freqs[1 + np.argmax(spec[1:])] if len(spec) > 1 else 2 * np.pi / span
            amp = np.ptp(y) / 2
            p, cov = curve_fit(damped_sine_model, t, y, p0=[amp, T0, w0, 0.0, C0], maxfev=maxfev)
            names = ("A", "T", "w", "phi", "C")
    except RuntimeError as exc:
        raise FitError(f"fit did not converge: {exc}") from exc
    if not p[1] > 0:
        raise FitError(f"fitted time constant {p[1]:g} is not positive")
    if p[1] > MAX_SPAN_RATIO * span:
        raise FitError(f"fitted time constant {p[1]:g} exceeds {MAX_SPAN_RATIO:g}x the sampled window {span:g}")
    err = np.sqrt(np.clip(np.diag(cov), 0, None)) if np.all(np.isfinite(cov)) else np.full(len(p), np.inf)
    res = FitResult(model, {k: float(v) for k, v in zip(names, p)},
                    {k: float(v) for k, v in zip(names, err)}, 0.0)
    return FitResult(model, res.params, res.errors, float(np.linalg.norm(res.evaluate(t) - y)))
