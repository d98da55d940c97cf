"""Photon pump into a storage cavity, with and without a lossy stabilizer cavity.

The qubit follows a semicircular drive and, at each rephasing time, the boost
cavity's Fock distribution has moved up by about one photon per period.
The lossy ``s`` cavity keeps the qubit on its lower quasienergy branch,
which tightens the distribution.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ..algebra import partial_diagonal
from ..drives import SystemModel, boost_model
from ..lindblad import Generator, IntegrationError, IntegratorConfig, rk4


class TruncationError(RuntimeError):
    """Population reached the last retained Fock level."""


@dataclass
class BoostResult:
    times: np.ndarray
    P: np.ndarray                   # (n_times, n_b + 1)
    period: float
    delta_b: float
    label: str = ""
    correction: float = 0.0
    boundary: float = 0.0           # largest population seen on the last Fock levels

    def __post_init__(self):
        n = np.arange(self.P.shape[1])
        self.mean = self.P @ n
        self.std = np.sqrt(np.clip(self.P @ n**2 - self.mean**2, 0, None))

    def index_at(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"no sample at t = {t}")
        return k

    def at_period(self, M: int) -> dict:
        k = self.index_at(M * self.period)
        P = self.P[k]
        return {"M": M, "mean": float(self.mean[k]), "std": float(self.std[k]), "mode": int(np.argmax(P))}

    def rephasing_times(self, M_max: int | None = None) -> list[dict]:
        """For each M, the integer N closest to ``M T delta_b / 2 pi`` and the mismatch."""
        M_max = M_max or int(round(self.times[-1] / self.period))
        out = []
        for M in range(1, M_max + 1):
            N = round(M * self.period * self.delta_b / (2 * math.pi))
            out.append({"M": M, "N": int(N), "t": M * self.period,
                        "mismatch": abs(M * self.period - N * 2 * math.pi / self.delta_b)})
        return out

    def pump_rate(self, M_max: int | None = None) -> float:
        """Least-squares slope of ``<n_b>`` at integer periods, in photons per period."""
        M_max = M_max or int(round(self.times[-1] / self.period))
        Ms = np.arange(M_max + 1)
        means = np.array([self.mean[self.index_at(M * self.period)] for M in Ms])
        return float(np.polyfit(Ms, means, 1)[0])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mean", "std"] + [f"P{n}" for n in range(self.P.shape[1])])
            for t, m, s, p in zip(self.times, self.mean, self.std, self.P):
                w.writerow([f"{v:.10g}" for v in (t, m, s, *p)])


def prune_decoupled(model: SystemModel, occupied=()) -> SystemModel:
    """Drop cavities with ``g = 0`` that are not listed in ``occupied``.

    Such a cavity starts in vacuum, never exchanges energy and so only
    enlarges the Hilbert space.
    """
    keep = tuple(c for c in model.cavities if c.g != 0 or c.name in occupied)
    return model.replace(cavities=keep)


def _initial(model: SystemModel, n_b0: int, qubit: int) -> np.ndarray:
    labels = [qubit] + [n_b0 if c.name == "b" else 0 for c in model.cavities]
    psi = model.layout.basis_state(*labels)
    return np.outer(psi, psi.conj())


def boost_run(model: SystemModel | None = None, periods: int = 20, n_b0: int = 10,
              cfg: IntegratorConfig = IntegratorConfig(1000), samples_per_period: int = 4,
              boundary_tol: float = 1e-4, label: str = "") -> BoostResult:
    """Propagate ``|g, n_b0, 0>`` for ``periods`` drive periods and record ``P(n_b, t)``.

    The qubit starts in ``|g>``, the instantaneous lower level at ``t = 0``
    in the ``ground_up`` frame.
    """
    from ..algebra import G

    model = prune_decoupled(model or boost_model(), occupied=("b",))
    names = [c.name for c in model.cavities]
    if "b" not in names:
        raise ValueError("boost model needs a cavity named 'b'")
    ib = names.index("b") + 1
    nb_max = model.cavities[ib - 1].n_max
    if n_b0 > nb_max:
        raise ValueError("initial photon number exceeds the boost truncation")
    gen = Generator(model, cfg.interaction_frame)
    T = model.period
    per = cfg.steps_per(T, samples_per_period)
    every = per // samples_per_period
    dt = T / per
    rho = gen.to_frame(_initial(model, n_b0, G), 0.0)
    times, dists = [0.0], [partial_diagonal(rho, model.layout, ib)]
    tops = [0.0]
    rhs = lambda t, r: gen.rhs(t, r, hermitian=True)
    for k in range(periods * samples_per_period):
        t0 = k * every * dt
        rho, _ = rk4(rhs, rho, t0, dt, every)
        t1 = (k + 1) * every * dt
        times.append(t1)
        # populations are frame independent
        dist = partial_diagonal(rho, model.layout, ib)
        dists.append(dist)
        edge = [dist[-1]]
        for i, c in enumerate(model.cavities):
            if c.name != "b":
                edge.append(partial_diagonal(rho, model.layout, i + 1)[-1])
        tops.append(max(edge))
        if tops[-1] > boundary_tol:
            raise TruncationError(f"population {tops[-1]:.2e} on the last Fock level at t = {t1:.4g}; "
                                  "increase the cavity truncation")
    drift = float(abs(np.trace(rho) - 1))
    if drift > 1e-6:
        raise IntegrationError(f"trace drifted by {drift:.2e}; increase steps_per_period")
    P = np.array(dists)
    return BoostResult(np.array(times), P / P.sum(axis=1, keepdims=True), T,
                       model.cavities[ib - 1].delta, label, drift, max(tops))


def compare_boost(periods: int = 20, n_b: int = 45, n_s: int = 3, cfg: IntegratorConfig = IntegratorConfig(1000),
                  **model_kw) -> dict:
    """Stabilized (``g_s = g_b``) and unstabilized (``g_s = 0``) runs side by side."""
    runs = {}
    for label, gs in (("stabilized", model_kw.pop("g_s", 1.0)), ("unstabilized", 0.0)):
        m = boost_model(n_b=n_b, n_s=n_s, g_s=gs, **model_kw)
        runs[label] = boost_run(m, periods, cfg=cfg, label=label)
    return runs
