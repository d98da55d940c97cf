"""Fixed-step RK4 propagation of states and density matrices.

Propagation runs by default in the interaction frame of the static cavity
energies ``sum_c Delta_c n_c``.  That term is diagonal, so the frame change
only multiplies matrix elements by phases; it removes the fastest oscillation
from the integrand without changing populations.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .algebra import SpaceLayout, hermiticity_defect
from .drives import SystemModel, hamiltonian, jump_operators

SPARSE_MIN_DIM = 96


class IntegrationError(RuntimeError):
    """The fixed-step integration lost accuracy; use more steps per period."""


@dataclass(frozen=True)
class IntegratorConfig:
    steps_per_period: int = 2000
    method: str = "rk4"
    # optional cap on the step in time units; raises the step count when set
    max_step: float | None = None
    interaction_frame: bool = True
    capture_per_period: int = 200

    def __post_init__(self):
        if self.method != "rk4":
            raise ValueError("only fixed-step 'rk4' is available")
        if self.steps_per_period < 100:
            raise ValueError("steps_per_period must be at least 100")

    def steps_per(self, period: float, multiple: int = 1) -> int:
        """Steps per period honouring ``max_step``, rounded up to ``multiple``."""
        n = self.steps_per_period
        if self.max_step:
            n = max(n, math.ceil(period / self.max_step))
        return multiple * math.ceil(n / multiple)

    def with_steps(self, steps_per_period: int) -> "IntegratorConfig":
        return IntegratorConfig(steps_per_period, self.method, self.max_step,
                                self.interaction_frame, self.capture_per_period)


def auto_steps(model: SystemModel, resolution: float = 0.1, minimum: int = 100, multiple: int = 1) -> int:
    """Steps per period so that the fastest scale advances ``resolution`` radians per step.

    The scale is the larger of ``max |B(t)|``, ``max |Delta_c|`` and ``omega``.
    """
    scale = max(model.drive.field_range()[1], model.drive.omega,
                *(abs(c.delta) for c in model.cavities))
    n = max(minimum, math.ceil(model.period * scale / resolution))
    return multiple * math.ceil(n / multiple)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    layout: SpaceLayout
    matrix: np.ndarray = field(repr=False)

    @classmethod
    def from_state(cls, layout: SpaceLayout, psi) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(layout, np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, layout: SpaceLayout) -> "DensityMatrix":
        d = layout.total_dim
        return cls(layout, np.eye(d, dtype=complex) / d)

    def defects(self) -> dict:
        m = self.matrix
        return {
            "hermiticity": float(np.abs(m - m.conj().T).max()),
            "trace": float(abs(np.trace(m) - 1)),
            "min_eigenvalue": float(np.linalg.eigvalsh((m + m.conj().T) / 2).min()),
        }

    def check(self, herm_tol=1e-10, trace_tol=1e-10, pos_tol=1e-8):
        dfc = self.defects()
        if dfc["hermiticity"] > herm_tol or dfc["trace"] > trace_tol or dfc["min_eigenvalue"] < -pos_tol:
            raise ValueError(f"not a valid density matrix: {dfc}")
        return self

    def expect(self, op) -> float:
        m = op.matrix if hasattr(op, "matrix") else op
        return float(np.real(np.trace(self.matrix @ m)))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


class Generator:
    """Cached pieces of ``H(t)`` and the dissipators of a model.

    In the interaction frame the Hamiltonian is
    ``sum_nu exp(i nu t) V_nu + B(t) . F`` where ``V_nu`` collects the
    coupling matrix elements oscillating at ``nu = h_j - h_k``.
    """

    def __init__(self, model: SystemModel, interaction_frame: bool = True, sparse: bool | None = None):
        self.model = model
        self.d = d = model.layout.total_dim
        self.h0 = model.cavity_diagonal()
        self.jumps = [L.matrix for L in jump_operators(model)]
        fields = model.field_operators()
        probe = model.drive.field(np.linspace(0, model.period, 64, endpoint=False))
        self.field_axes = [i for i in range(3) if np.any(probe[:, i] != 0)]
        self.field_ops = [fields[i] for i in self.field_axes]
        v = model.coupling()
        self.frame = interaction_frame and self._jumps_single_frequency()
        if self.frame:
            self.components = self._split_by_frequency(v)
            self.static = np.zeros((d, d), dtype=complex)
        else:
            self.components = []
            self.static = v + np.diag(self.h0)
        self.ldl = sum((L.conj().T @ L for L in self.jumps), np.zeros((d, d), dtype=complex))
        self.sparse = (d >= SPARSE_MIN_DIM) if sparse is None else sparse
        if self.sparse:
            conv = lambda m: sp.csr_matrix(m)
            self._static_eff = conv(self.static - 0.5j * self.ldl)
            self._field_sp = [conv(f) for f in self.field_ops]
            self._comp_sp = [(nu, conv(m)) for nu, m in self.components]
            self._jumps_sp = [conv(L) for L in self.jumps]

    def _jumps_single_frequency(self) -> bool:
        for L in self.jumps:
            j, k = np.nonzero(L)
            if len(j) and np.ptp(self.h0[j] - self.h0[k]) > 1e-12:
                return False
        return True

    def _split_by_frequency(self, v: np.ndarray) -> list[tuple[float, np.ndarray]]:
        j, k = np.nonzero(v)
        if not len(j):
            return []
        nus = np.round(self.h0[j] - self.h0[k], 12)
        out = []
        for nu in np.unique(nus):
            m = np.zeros_like(v)
            sel = nus == nu
            m[j[sel], k[sel]] = v[j[sel], k[sel]]
            out.append((float(nu), m))
        return out

    # -- time-dependent coefficients ---------------------------------------

    def coefficients(self, t: float) -> np.ndarray:
        b = self.model.drive.field(t)
        c = [b[i] for i in self.field_axes] + [np.exp(1j * nu * t) for nu, _ in self.components]
        return np.asarray(c, dtype=complex)

    def hamiltonian(self, t: float) -> np.ndarray:
        """Hamiltonian in the working frame (dense)."""
        h = self.static.copy()
        for c, m in zip(self.coefficients(t), self.field_ops + [m for _, m in self.components]):
            h += c * m
        return h

    def _heff(self, t):
        c = self.coefficients(t)
        if self.sparse:
            h = self._static_eff
            for ci, m in zip(c, self._field_sp + [m for _, m in self._comp_sp]):
                h = h + ci * m
            return h
        h = self.static - 0.5j * self.ldl
        for ci, m in zip(c, self.field_ops + [m for _, m in self.components]):
            h = h + ci * m
        return h

    def rhs(self, t: float, rho: np.ndarray, hermitian: bool = False) -> np.ndarray:
        """Lindblad generator applied to ``rho`` (a matrix or a stack of them).

        With ``hermitian=True`` the term ``rho H_eff^dag`` is taken as the
        adjoint of ``H_eff rho``, which halves the cost for physical states.
        """
        h = self._heff(t)
        x = h @ rho
        if hermitian:
            y = np.swapaxes(x, -1, -2).conj()
        elif self.sparse:
            y = (h.conj() @ rho.T).T
        else:
            y = rho @ h.conj().T
        out = -1j * (x - y)
        jumps = self._jumps_sp if self.sparse else self.jumps
        for L in jumps:
            y = L @ rho
            if self.sparse:
                out += (L @ y.conj().T).conj().T
            else:
                out += y @ L.conj().T
        return out

    def schrodinger_rhs(self, t: float, psi: np.ndarray) -> np.ndarray:
        h = self._heff(t) if not self.jumps else self.hamiltonian(t)
        return -1j * (h @ psi)

    # -- frames ---------------------------------------------------------------

    def phases(self, t: float) -> np.ndarray:
        """``exp(-i (h_j - h_k) t)``: maps frame density matrices to the lab."""
        if not self.frame:
            return np.ones((self.d, self.d))
        return np.exp(-1j * np.subtract.outer(self.h0, self.h0) * t)

    def to_lab(self, rho: np.ndarray, t: float) -> np.ndarray:
        return rho * self.phases(t) if self.frame else rho

    def to_frame(self, rho: np.ndarray, t: float) -> np.ndarray:
        return rho * self.phases(t).conj() if self.frame else rho

    def state_to_lab(self, psi: np.ndarray, t: float) -> np.ndarray:
        if not self.frame:
            return psi
        ph = np.exp(-1j * self.h0 * t)
        return ph.reshape((-1,) + (1,) * (psi.ndim - 1)) * psi

    def state_to_frame(self, psi: np.ndarray, t: float) -> np.ndarray:
        if not self.frame:
            return psi
        ph = np.exp(1j * self.h0 * t)
        return ph.reshape((-1,) + (1,) * (psi.ndim - 1)) * psi

    # -- Liouville space --------------------------------------------------------

    def liouvillian_parts(self) -> tuple[np.ndarray, list[np.ndarray]]:
        """Static part and per-coefficient parts of the column-stacked generator."""
        d = self.d
        eye = np.eye(d)

        def commutator(h):
            return -1j * (np.kron(eye, h) - np.kron(h.T, eye))

        l0 = commutator(self.static)
        for L in self.jumps:
            ldl = L.conj().T @ L
            l0 = l0 + np.kron(L.conj(), L) - 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
        parts = [commutator(m) for m in self.field_ops + [m for _, m in self.components]]
        return l0, parts


def rk4(rhs, y, t0: float, dt: float, n: int, capture_every: int = 0):
    """Integrate ``n`` fixed RK4 steps; optionally return every k-th state."""
    t = t0
    samples = [y] if capture_every else None
    half = dt / 2
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            k1 = rhs(t, y)
            k2 = rhs(t + half, y + half * k1)
            k3 = rhs(t + half, y + half * k2)
            k4 = rhs(t + dt, y + dt * k3)
            y = y + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            t = t0 + (i + 1) * dt
            if capture_every and (i + 1) % capture_every == 0:
                samples.append(y)
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"RK4 diverged (step {dt:.3g} too large for the generator); "
                               "increase steps_per_period")
    return y, samples


def lindblad_rhs(model: SystemModel, rho, t: float) -> np.ndarray:
    """``-i[H(t), rho] + sum_j (L_j rho L_j^dag - {L_j^dag L_j, rho} / 2)`` in the lab frame."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if isinstance(rho, DensityMatrix) and rho.layout != model.layout:
        raise ValueError("density matrix layout does not match the model")
    if m.shape[-2:] != (model.layout.total_dim,) * 2:
        raise ValueError(f"density matrix of shape {m.shape} does not match model dimension")
    h = hamiltonian(model, t).matrix
    out = -1j * (h @ m - m @ h)
    for L in jump_operators(model):
        L = L.matrix
        ldl = L.conj().T @ L
        out += L @ m @ L.conj().T - 0.5 * (ldl @ m + m @ ldl)
    return out


@dataclass
class Propagation:
    state: DensityMatrix
    times: np.ndarray | None = None
    samples: np.ndarray | None = None     # lab-frame density matrices
    trace_drift: float = 0.0
    correction: float = 0.0               # size of the final re-hermitization/renormalization


def _step_plan(model, t0, t1, cfg, capture_every_period):
    period = model.period
    per = cfg.steps_per(period, capture_every_period or 1)
    n = max(1, round((t1 - t0) / period * per))
    return n, (t1 - t0) / n, per


def propagate_density(model: SystemModel, rho0, t0: float, t1: float,
                      cfg: IntegratorConfig = IntegratorConfig(), capture: int | bool = False,
                      generator: Generator | None = None) -> Propagation:
    """RK4-integrate the master equation from ``t0`` to ``t1``.

    ``capture`` is the number of stored samples per period (``True`` uses
    ``cfg.capture_per_period``).  The result is re-hermitized and
    renormalized once at the end; the size of that correction is reported.
    """
    if t1 < t0:
        raise ValueError("t1 must not precede t0")
    if isinstance(rho0, DensityMatrix):
        if rho0.layout != model.layout:
            raise ValueError("density matrix layout does not match the model")
        rho0 = rho0.matrix
    gen = generator or Generator(model, cfg.interaction_frame)
    per_period = cfg.capture_per_period if capture is True else int(capture)
    n, dt, per = _step_plan(model, t0, t1, cfg, per_period)
    every = per // per_period if per_period else 0
    y0 = gen.to_frame(np.asarray(rho0, dtype=complex), t0)
    herm = hermiticity_defect(y0) < 1e-14
    y, samples = rk4(lambda t, r: gen.rhs(t, r, hermitian=herm), y0, t0, dt, n, every)
    drift = float(abs(np.trace(y) - 1))
    if drift > 1e-6:
        raise IntegrationError(f"trace drifted by {drift:.2e}; increase steps_per_period (now {per})")
    rho = gen.to_lab(y, t1)
    fixed = (rho + rho.conj().T) / 2
    fixed = fixed / np.trace(fixed).real
    out = Propagation(DensityMatrix(model.layout, fixed), trace_drift=drift,
                      correction=float(np.linalg.norm(fixed - rho)))
    if every:
        out.times = t0 + dt * every * np.arange(len(samples))
        out.samples = np.array([gen.to_lab(s, t) for s, t in zip(samples, out.times)])
    return out


def propagate_state(model: SystemModel, psi0, t0: float, t1: float,
                    cfg: IntegratorConfig = IntegratorConfig(), capture: int = 0,
                    generator: Generator | None = None):
    """Schrodinger evolution; ``psi0`` may be a vector or a matrix of columns.

    Returns the final state, or ``(times, samples)`` as well when ``capture``
    samples per period are requested.
    """
    if not model.is_closed:
        warnings.warn("propagate_state ignores the model's dissipators", stacklevel=2)
        model = model.closed()
    gen = generator or Generator(model, cfg.interaction_frame)
    n, dt, per = _step_plan(model, t0, t1, cfg, capture)
    every = per // capture if capture else 0
    y0 = gen.state_to_frame(np.asarray(psi0, dtype=complex), t0)
    y, samples = rk4(gen.schrodinger_rhs, y0, t0, dt, n, every)
    out = gen.state_to_lab(y, t1)
    if not every:
        return out
    times = t0 + dt * every * np.arange(len(samples))
    return out, times, np.array([gen.state_to_lab(s, t) for s, t in zip(samples, times)])


def write_trajectory_csv(path, model: SystemModel, times, rhos, basis=None):
    """Dump ``t, <sz>, <n_c>..., p_0...`` rows; ``basis`` columns give the named basis."""
    sz = model.qubit_op("sz").matrix
    ns = [model.cavity_op(i, "n").matrix for i in range(len(model.cavities))]
    header = ["t", "sz"] + [f"n_{c.name}" for c in model.cavities]
    d = model.layout.total_dim
    header += [f"p{i}" for i in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for t, r in zip(times, rhos):
            rr = r if basis is None else basis.conj().T @ r @ basis
            row = [t, np.real(np.trace(r @ sz))] + [np.real(np.trace(r @ n)) for n in ns]
            row += list(np.real(np.diag(rr)))
            w.writerow([f"{x:.12g}" for x in row])
