"""Emulation of the adiabatic-regime transmon experiment.

Inputs are ordinary frequencies in MHz and times in microseconds; models are
built in angular units (rad/us).  Pure dephasing uses the drive-following
time ``T_d`` rather than ``T_2``: the strong drive suppresses slow frequency
noise, and ``T_d`` is the decay actually seen far from resonance.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..drives import SystemModel, qubit_cavity_model
from ..floquet import QuasienergySpectrum, qubit_spectrum
from ..lindblad import IntegratorConfig, auto_steps
from ..steadystate import build_superoperator, evolve, steady_state
from .fitting import FitError, fit_exponential

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class NoiseParams:
    """Measured device times in microseconds."""

    T1: float = 11.4
    T_d: float = 10.2
    T_phi: float = 0.59
    T_echo: float = 3.0
    T_cav: float = 3.8       # field decay; the photon lifetime is T_cav / 2

    @property
    def photon_lifetime(self) -> float:
        return self.T_cav / 2


@dataclass(frozen=True)
class DeviceParams:
    """Drive and rates as ordinary frequencies in MHz (``x 2 pi`` gives rad/us)."""

    B0: float = 80.0
    omega: float = 0.75
    g: float = 13.0
    kappa: float = 0.084
    gamma: float = 0.0138
    T_d: float = 10.2        # us; pure dephasing rate 1 / T_d
    n_max: int = 3

    def model(self, detuning: float, kind: str = "circular", **drive_kw) -> SystemModel:
        """Circular-drive model with ``Delta = B0 + detuning`` (MHz)."""
        kw = {k: TWO_PI * v for k, v in drive_kw.items()}
        delta = self.B0 + detuning
        return qubit_cavity_model(TWO_PI * self.B0, TWO_PI * self.omega, TWO_PI * delta, TWO_PI * self.g,
                                  TWO_PI * self.kappa, TWO_PI * self.gamma, n_max=self.n_max,
                                  gamma_phi=1.0 / self.T_d if self.T_d else 0.0, kind=kind, **kw)

    @property
    def cavity_lifetime(self) -> float:
        return 1.0 / (TWO_PI * self.kappa)


def branch_populations(samples: np.ndarray, spectrum: QuasienergySpectrum, layout) -> np.ndarray:
    """``P(phi_minus(t))`` for density matrices sampled on repeated period grids."""
    from ..algebra import reduced_density

    n_t = spectrum.n_t
    phi = spectrum.states[np.arange(len(samples)) % n_t, :, 1]
    rq = np.array([reduced_density(r, layout, 0) for r in samples])
    return np.real(np.einsum("ti,tij,tj->t", phi.conj(), rq, phi))


def initial_state(model: SystemModel, spectrum: QuasienergySpectrum, branch: str) -> np.ndarray:
    """``|phi_branch(0)> x |0...0>`` as a density matrix."""
    col = {"plus": 0, "minus": 1}[branch]
    vac = np.zeros(model.layout.total_dim // 2)
    vac[0] = 1.0
    psi = np.kron(spectrum.states[0, :, col], vac)
    return np.outer(psi, psi.conj())


def relaxation_curves(model: SystemModel, duration: float, samples_per_period: int = 16,
                      resolution: float = 0.05, steps_per_period: int | None = None):
    """``P(phi_minus)(t)`` from both branch initializations plus the steady state.

    One superoperator with sub-period snapshots serves every initial state.
    """
    n = steps_per_period or auto_steps(model, resolution, multiple=samples_per_period)
    n = samples_per_period * math.ceil(n / samples_per_period)
    cfg = IntegratorConfig(n)
    spectrum = qubit_spectrum(model, cfg, samples_per_period)
    sop = build_superoperator(model, cfg, n_t=samples_per_period)
    n_per = max(1, math.ceil(duration / model.period - 1e-9))
    curves, qubit = {}, {}
    for b in ("plus", "minus"):
        times, rhos = evolve(sop, initial_state(model, spectrum, b), n_per)
        keep = times <= duration * (1 + 1e-12)
        times, rhos = times[keep], rhos[keep]
        curves[b] = branch_populations(rhos, spectrum, model.layout)
        qubit[b] = rhos
    ss = steady_state(sop, model, cfg, target=spectrum)
    return times, curves, qubit, ss, spectrum


def _fit(t, y):
    try:
        return fit_exponential(t, y)
    except (FitError, ValueError) as exc:
        return f"fit failed: {exc}"


@dataclass
class AdiabaticResult:
    detunings: np.ndarray          # Delta - B0 in MHz
    times: np.ndarray              # us
    curves: np.ndarray             # (n_det, 2, n_t): P(phi_minus) from phi_plus, phi_minus
    fits: list                     # per detuning: {"plus": FitResult|str, "minus": ...}
    p_steady: np.ndarray           # exact period-averaged P(phi_minus) of the steady state
    t_spectral: np.ndarray         # observable-resolved relaxation time (us)
    params: DeviceParams = field(default_factory=DeviceParams)

    @property
    def t_stab(self) -> np.ndarray:
        """Fitted time constant of the ``phi_plus`` trace (NaN where the fit failed)."""
        return np.array([f["plus"].T if hasattr(f["plus"], "T") else math.nan for f in self.fits])

    @property
    def p_steady_fit(self) -> np.ndarray:
        """Mean fitted asymptote of the two traces."""
        out = []
        for f in self.fits:
            cs = [v.params["C"] for v in f.values() if hasattr(v, "params")]
            out.append(float(np.mean(cs)) if cs else math.nan)
        return np.array(out)

    def write_csv(self, prefix):
        with open(f"{prefix}_summary.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["detuning_mhz", "t_stab_us", "p_steady_fit", "p_steady", "t_spectral_us"])
            for row in zip(self.detunings, self.t_stab, self.p_steady_fit, self.p_steady, self.t_spectral):
                w.writerow([f"{v:.10g}" for v in row])
        with open(f"{prefix}_curves.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["detuning_mhz", "t_us", "p_minus_from_plus", "p_minus_from_minus"])
            for d, c in zip(self.detunings, self.curves):
                for t, a, b in zip(self.times, c[0], c[1]):
                    w.writerow([f"{v:.10g}" for v in (d, t, a, b)])


def _point(args):
    params, det, duration, spp, fit_start = args
    model = params.model(det)
    times, curves, _, ss, _ = relaxation_curves(model, duration, spp)
    start = model.period if fit_start is None else fit_start
    sel = times >= start - 1e-9
    fits = {b: _fit(times[sel], curves[b][sel]) for b in ("plus", "minus")}
    return times, np.array([curves["plus"], curves["minus"]]), fits, ss.fidelity, ss.observable_time


def adiabatic_experiment(detunings, params: DeviceParams = DeviceParams(), duration: float = 20.0,
                         samples_per_period: int = 16, workers: int = 1,
                         fit_start: float | None = None) -> AdiabaticResult:
    """Relaxation curves, exponential fits and steady populations versus ``Delta - B0`` (MHz).

    Fits use samples from ``fit_start`` (default: one drive period) onward.
    Near resonance the initial state exchanges an excitation with the cavity
    at the vacuum Rabi frequency, far faster than the sampling; that
    transient is left out of the fit window.
    """
    detunings = np.asarray(detunings, dtype=float)
    jobs = [(params, float(d), duration, samples_per_period, fit_start) for d in detunings]
    if workers <= 1:
        res = [_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            res = list(pool.map(_point, jobs))
    times = res[0][0]
    return AdiabaticResult(detunings, times, np.array([r[1] for r in res]), [r[2] for r in res],
                           np.array([r[3] for r in res]), np.array([r[4] for r in res]), params)


def _steady_point(args):
    params, det, spp = args
    model = params.model(det)
    cfg = IntegratorConfig(auto_steps(model, 0.05, multiple=spp))
    spectrum = qubit_spectrum(model, cfg, spp)
    ss = steady_state(build_superoperator(model, cfg), model, cfg, target=spectrum)
    return ss.fidelity, ss.observable_time


def steady_population_scan(detunings, params: DeviceParams = DeviceParams(), samples_per_period: int = 16,
                           workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Exact period-averaged steady ``P(phi_minus)`` and relaxation time versus ``Delta - B0`` (MHz).

    Skips the time traces, so it is much cheaper than :func:`adiabatic_experiment`.
    """
    jobs = [(params, float(d), samples_per_period) for d in detunings]
    if workers <= 1:
        res = [_steady_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            res = list(pool.map(_steady_point, jobs))
    return np.array([r[0] for r in res]), np.array([r[1] for r in res])
