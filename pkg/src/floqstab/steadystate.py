"""One-period Floquet superoperator, steady state and fidelity.

Vectorization is column stacking in the computational basis:
``vec(rho)[j + d k] = rho[j, k]`` so ``vec(A X B) = (B^T kron A) vec(X)``.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .algebra import reduced_density
from .drives import SystemModel
from .floquet import DEFAULT_NT, QuasienergySpectrum
from .lindblad import DensityMatrix, Generator, IntegratorConfig, propagate_density


class SteadyStateError(RuntimeError):
    """The superoperator has no eigenvalue close enough to one."""


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.shape[0])))
    return np.asarray(v).reshape((d, d) + v.shape[1:], order="F")


@dataclass(frozen=True, eq=False)
class FloquetSuperoperator:
    dim: int
    matrix: np.ndarray = field(repr=False)         # maps vec(rho(0)) to vec(rho(T))
    period: float
    vectorization: str = "column-stacking"
    # optional maps for rho(0) -> rho(t_j), t_j = j T / n_t (lab frame)
    times: np.ndarray | None = field(default=None, repr=False)
    snapshots: np.ndarray | None = field(default=None, repr=False)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho))

    def trace_defect(self) -> float:
        """Deviation of ``vec(1)^dag S`` from ``vec(1)^dag`` (trace preservation)."""
        one = vec(np.eye(self.dim))
        return float(np.abs(one @ self.matrix - one).max())

    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.matrix)).max())

    def choi(self) -> np.ndarray:
        """``sum_jk E(|j><k|) kron |j><k|`` (Hermitian and PSD for a CP map)."""
        d = self.dim
        s4 = self.matrix.reshape(d, d, d, d)           # [b, a, k, j]
        return s4.transpose(1, 3, 0, 2).reshape(d * d, d * d)

    def choi_min_eigenvalue(self) -> float:
        c = self.choi()
        return float(np.linalg.eigvalsh((c + c.conj().T) / 2).min())

    def save(self, path):
        """Dump matrix and spectrum to ``.npz``."""
        np.savez_compressed(path, matrix=self.matrix, period=self.period,
                            eigenvalues=np.linalg.eigvals(self.matrix))


def build_superoperator(model: SystemModel, cfg: IntegratorConfig = IntegratorConfig(),
                        n_t: int = 0) -> FloquetSuperoperator:
    """Propagate all ``d^2`` matrix units over one period at once.

    RK4 acts on the propagator ``P' = L(t) P`` in Liouville space.  With
    ``n_t > 0`` the propagators at ``t_j = j T / n_t`` are kept as well.
    """
    gen = Generator(model, cfg.interaction_frame, sparse=False)
    d = gen.d
    l0, parts = gen.liouvillian_parts()
    parts = np.array(parts) if parts else np.zeros((0, d * d, d * d), dtype=complex)
    T = model.period
    per = cfg.steps_per(T, n_t or 1)
    every = per // n_t if n_t else 0
    dt = T / per

    def gen_at(t):
        c = gen.coefficients(t)
        return l0 + np.tensordot(c, parts, axes=1) if len(c) else l0

    def phase_vec(t):
        return vec(gen.phases(t))

    p = np.eye(d * d, dtype=complex)
    snaps = [p.copy()] if every else None
    la = gen_at(0.0)
    for i in range(per):
        t = i * dt
        lm = gen_at(t + dt / 2)
        lb = gen_at(t + dt)
        k1 = la @ p
        k2 = lm @ (p + (dt / 2) * k1)
        k3 = lm @ (p + (dt / 2) * k2)
        k4 = lb @ (p + dt * k3)
        p = p + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        la = lb
        if every and (i + 1) % every == 0 and i + 1 < per:
            snaps.append(phase_vec((i + 1) * dt)[:, None] * p)
    s = phase_vec(T)[:, None] * p
    times = snapshots = None
    if every:
        times = np.arange(n_t) * T / n_t
        snapshots = np.array(snaps)
    return FloquetSuperoperator(d, s, T, times=times, snapshots=snapshots)


@dataclass(frozen=True, eq=False)
class SteadyStateResult:
    state: DensityMatrix                  # rho_SS(0)
    times: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)   # rho_SS(t_j), shape (n_t, d, d)
    eigenvalues: np.ndarray = field(repr=False)  # sorted by decreasing modulus
    stabilization_rate: float
    period: float
    n_unit: int = 1                       # eigenvalues within 1e-6 of the unit circle
    defects: dict = field(default_factory=dict)
    fidelity: float | None = None
    observable_rate: float | None = None  # slowest mode seen by P(phi_minus) from phi_pm x vacuum

    @property
    def stabilization_time(self) -> float:
        return np.inf if self.stabilization_rate == 0 else 1.0 / self.stabilization_rate

    @property
    def observable_time(self) -> float | None:
        if self.observable_rate is None:
            return None
        return np.inf if self.observable_rate == 0 else 1.0 / self.observable_rate


def _gap_rate(ev: np.ndarray, period: float) -> float:
    if len(ev) < 2:
        return 0.0
    mag = abs(ev[1])
    return float(-np.log(mag) / period) if mag > 0 else np.inf


def steady_state(superop: FloquetSuperoperator, model: SystemModel,
                 cfg: IntegratorConfig = IntegratorConfig(), target: QuasienergySpectrum | None = None,
                 n_t: int | None = None) -> SteadyStateResult:
    """Eigenvalue-one mode of the superoperator, resolved over one period.

    When ``target`` (the qubit's periodic states) is given, the fidelity with
    ``phi_minus`` and the observable-resolved relaxation rate are filled in.
    """
    if n_t is None:
        n_t = target.n_t if target is not None else (len(superop.times) if superop.times is not None else DEFAULT_NT)
    d = superop.dim
    ev, left, right = sla.eig(superop.matrix, left=True, right=True)
    order = np.argsort(-np.abs(ev), kind="stable")
    ev, left, right = ev[order], left[:, order], right[:, order]
    i0 = int(np.argmin(np.abs(ev - 1)))
    if abs(ev[i0] - 1) > 1e-4:
        raise SteadyStateError(f"no eigenvalue near 1 (closest {ev[i0]:.6g}); superoperator inaccurate")
    if i0 != 0:
        perm = [i0] + [k for k in range(len(ev)) if k != i0]
        ev, left, right = ev[perm], left[:, perm], right[:, perm]
    n_unit = int(np.sum(np.abs(np.abs(ev) - 1) < 1e-6))
    if n_unit > 1:
        warnings.warn(f"{n_unit} eigenvalues on the unit circle: steady state is not unique", stacklevel=2)
    raw = unvec(right[:, 0])
    raw = raw / np.trace(raw)
    rho = (raw + raw.conj().T) / 2
    rho = rho / np.trace(rho).real
    defects = {"antihermitian": float(np.linalg.norm(raw - raw.conj().T) / 2),
               "eigenvalue": float(abs(ev[0] - 1))}
    if superop.snapshots is not None and len(superop.times) == n_t:
        times = superop.times
        samples = np.einsum("tij,j->ti", superop.snapshots, vec(rho))
        samples = unvec(samples.T).transpose(2, 0, 1)
        samples = (samples + samples.conj().transpose(0, 2, 1)) / 2
    else:
        run = propagate_density(model, rho, 0.0, model.period, cfg, capture=n_t)
        times, samples = run.times[:-1], run.samples[:-1]
    res = SteadyStateResult(DensityMatrix(model.layout, rho), times, samples, ev,
                            _gap_rate(ev, superop.period), superop.period, n_unit, defects)
    if target is None:
        return res
    f = fidelity(res, target, model)
    phi0 = target.states[0]
    proj = _target_projector(model, phi0[:, 1])
    starts = [_qubit_state_with_vacuum(model, phi0[:, b]) for b in (0, 1)]
    rate = observable_relaxation_rate(ev, left, right, proj, starts, superop.period)
    return SteadyStateResult(res.state, times, samples, ev, res.stabilization_rate, res.period,
                             n_unit, defects, f, rate)


def _target_projector(model: SystemModel, phi: np.ndarray) -> np.ndarray:
    rest = model.layout.total_dim // 2
    return np.kron(np.outer(phi, phi.conj()), np.eye(rest))


def _qubit_state_with_vacuum(model: SystemModel, phi: np.ndarray) -> np.ndarray:
    vac = np.zeros(model.layout.total_dim // 2)
    vac[0] = 1.0
    psi = np.kron(phi, vac)
    return np.outer(psi, psi.conj())


def observable_relaxation_rate(ev, left, right, observable: np.ndarray, initial_states,
                               period: float, rel_tol: float = 1e-2) -> float:
    """Slowest decay rate among modes that carry ``<observable>`` from the given starts.

    Starting from ``rho0``, mode k adds ``<L_k, rho0> lambda_k^M Tr(O R_k)``
    at time ``M T`` (with ``<L_k, R_k> = 1``).  A mode counts when this weight,
    maximized over ``initial_states``, is at least ``rel_tol`` times the
    largest weight.  Qubit-cavity coherences that the population never sees
    are thereby excluded from the rate.
    """
    o = vec(np.asarray(observable).T)           # Tr(O X) = vec(O^T) . vec(X)
    starts = [vec(r) for r in initial_states]
    weights = np.zeros(len(ev) - 1)
    for k in range(1, len(ev)):
        norm = left[:, k].conj() @ right[:, k]
        if abs(norm) < 1e-14:
            continue
        excite = max(abs(left[:, k].conj() @ r0) for r0 in starts)
        weights[k - 1] = excite * abs(o @ right[:, k]) / abs(norm)
    if not len(weights) or weights.max() == 0:
        return 0.0
    keep = np.nonzero(weights >= rel_tol * weights.max())[0]
    mag = np.abs(ev[1:][keep]).max()
    return float(-np.log(mag) / period) if mag > 0 else np.inf


def fidelity(result: SteadyStateResult, target: QuasienergySpectrum, model: SystemModel | None = None) -> float:
    """Period average of the ``phi_minus`` population of the qubit.

    The grid is uniform and periodic, so the trapezoid rule is the mean.
    """
    if target.states is None or len(target.times) != len(result.times) \
            or not np.allclose(target.times, result.times, rtol=0, atol=1e-9 * result.period):
        raise ValueError("steady state and target are sampled on different grids")
    layout = result.state.layout
    rq = np.array([reduced_density(r, layout, 0) for r in result.samples])
    phi = target.states[:, :, 1]
    pop = np.real(np.einsum("ti,tij,tj->t", phi.conj(), rq, phi))
    return float(np.clip(pop.mean(), 0.0, 1.0))


def evolve(superop: FloquetSuperoperator, rho0, n_periods: int) -> tuple[np.ndarray, np.ndarray]:
    """``rho(M T + t_j)`` for ``M < n_periods`` from the stored snapshots, plus ``rho(n_periods T)``."""
    if superop.snapshots is None:
        raise ValueError("superoperator was built without sub-period snapshots")
    n_t = len(superop.times)
    d = superop.dim
    v = vec(np.asarray(rho0, dtype=complex))
    out = np.empty((n_periods * n_t + 1, d * d), dtype=complex)
    for M in range(n_periods):
        out[M * n_t:(M + 1) * n_t] = superop.snapshots @ v
        v = superop.matrix @ v
    out[-1] = v
    times = (np.arange(n_periods * n_t + 1) / n_t) * superop.period
    return times, out.reshape(-1, d, d).transpose(0, 2, 1)


def write_spectrum_csv(path, eigenvalues, period: float):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im", "abs", "rate"])
        for z in eigenvalues:
            rate = -np.log(abs(z)) / period if abs(z) > 0 else np.inf
            w.writerow([f"{z.real:.12g}", f"{z.imag:.12g}", f"{abs(z):.12g}", f"{rate:.12g}"])
