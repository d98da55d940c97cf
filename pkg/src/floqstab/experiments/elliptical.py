"""Stabilization with elliptical fields, where the instantaneous splitting
matches the cavity only during part of each period."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..algebra import reduced_density
from .adiabatic import TWO_PI, DeviceParams, relaxation_curves


@dataclass
class EllipticalResult:
    times: np.ndarray                # us
    p_minus: dict                    # branch -> P(phi_minus)(t)
    sz: dict                         # branch -> <sigma_z>(t)
    distance: np.ndarray             # trace distance of the two qubit states
    split_range: tuple               # min and max |B| / 2 pi in MHz
    delta: float                     # MHz

    def converged_at(self, tol: float = 0.05) -> float | None:
        """First time after which the qubit states stay within ``tol``."""
        above = np.nonzero(self.distance >= tol)[0]
        if not len(above):
            return float(self.times[0])
        if above[-1] == len(self.times) - 1:
            return None
        return float(self.times[above[-1] + 1])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_us", "p_minus_from_plus", "p_minus_from_minus", "sz_from_plus", "sz_from_minus",
                        "trace_distance"])
            for k, t in enumerate(self.times):
                row = (t, self.p_minus["plus"][k], self.p_minus["minus"][k], self.sz["plus"][k],
                       self.sz["minus"][k], self.distance[k])
                w.writerow([f"{v:.10g}" for v in row])


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum())


def elliptical_run(bx: float, bz: float, delta: float, omega: float = 0.75, duration: float | None = None,
                   params: DeviceParams = DeviceParams(), samples_per_period: int = 16,
                   lifetimes: float = 5.0) -> EllipticalResult:
    """Propagate ``phi_plus`` and ``phi_minus`` initial states under an elliptical drive.

    Amplitudes and ``delta`` (the cavity frequency) are in MHz; ``duration``
    defaults to ``lifetimes`` cavity lifetimes.
    """
    p = DeviceParams(0.0, omega, params.g, params.kappa, params.gamma, params.T_d, params.n_max)
    model = p.model(delta, kind="elliptical", bx=bx, bz=bz)
    if duration is None:
        duration = lifetimes * p.cavity_lifetime
    times, curves, rhos, _, _ = relaxation_curves(model, duration, samples_per_period)
    lay = model.layout
    sz = np.diag([1.0, -1.0])
    qs = {b: np.array([reduced_density(r, lay, 0) for r in rhos[b]]) for b in rhos}
    dist = np.array([trace_distance(x, y) for x, y in zip(qs["plus"], qs["minus"])])
    ez = {b: np.real(np.einsum("ij,tji->t", sz, qs[b])) for b in qs}
    lo, hi = model.drive.field_range()
    return EllipticalResult(times, curves, ez, dist, (lo / TWO_PI, hi / TWO_PI), delta)
