"""Closed-system Floquet analysis of the driven qubit.

Quasienergies come from the eigenphases of the one-period propagator
``U(T)``; periodic states are ``phi(t) = exp(i eps t) U(t) phi(0)``.  Copies
in other zones are ``phi^(m)(t) = exp(i m omega t) phi(t)`` with quasienergy
``eps + m omega``.

Branch labels: ``plus`` is the state that starts closest to the instantaneous
upper level (spin along the field), ``minus`` the one closest to the lower
level.  Cavity loss drives the qubit into ``minus``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import Operator
from .drives import SystemModel, hamiltonian
from .lindblad import Generator, IntegrationError, IntegratorConfig, propagate_state

DEFAULT_NT = 256
MIN_NT = 64


class DegenerateSpectrumError(ValueError):
    """The monodromy eigenphases are degenerate; the pair cannot be labelled."""


def fold(eps, omega: float):
    """Map quasienergies into the zeroth zone ``[-omega/2, omega/2)``."""
    return np.mod(np.asarray(eps) + omega / 2, omega) - omega / 2


def circular_quasienergies(B0: float, omega: float) -> tuple[float, float]:
    """Exact ``(eps_plus, eps_minus)`` of the circularly driven qubit.

    In the frame co-rotating about y the Hamiltonian is static with splitting
    ``sqrt(B0^2 + omega^2)``, but that frame returns to minus itself after one
    period, which shifts both quasienergies by ``omega / 2``.  Hence
    ``eps_pm = +-(sqrt(B0^2 + omega^2) - omega) / 2`` folded.
    """
    half = 0.5 * (np.hypot(B0, omega) - omega)
    return float(fold(half, omega)), float(fold(-half, omega))


@dataclass(frozen=True, eq=False)
class QuasienergySpectrum:
    eps_plus: float
    eps_minus: float
    omega: float
    vectors: np.ndarray = field(repr=False)            # columns phi_plus(0), phi_minus(0)
    times: np.ndarray | None = field(default=None, repr=False)
    states: np.ndarray | None = field(default=None, repr=False)   # (N_t, d, 2)
    gauge: str = "largest component of phi(0) real and positive"

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    @property
    def delta_eps(self) -> float:
        return self.eps_plus - self.eps_minus

    @property
    def n_t(self) -> int:
        return 0 if self.times is None else len(self.times)

    def state(self, branch: str, m: int = 0) -> np.ndarray:
        """Samples ``(N_t, d)`` of ``phi_branch^(m)(t)``."""
        if self.states is None:
            raise ValueError("periodic states have not been computed")
        col = {"plus": 0, "minus": 1}[branch]
        return np.exp(1j * m * self.omega * self.times)[:, None] * self.states[:, :, col]

    def energy(self, branch: str, m: int = 0) -> float:
        return (self.eps_plus if branch == "plus" else self.eps_minus) + m * self.omega


def monodromy(model: SystemModel, cfg: IntegratorConfig = IntegratorConfig()) -> Operator:
    """One-period propagator ``U(T)`` from propagating the identity's columns."""
    if not model.is_closed:
        raise ValueError("monodromy needs a closed model; use model.closed()")
    d = model.layout.total_dim
    u = propagate_state(model, np.eye(d, dtype=complex), 0.0, model.period, cfg)
    defect = unitarity_defect(u)
    if defect > 1e-6:
        raise IntegrationError(f"monodromy unitarity defect {defect:.2e}; increase steps_per_period")
    return Operator(model.layout, u)


def unitarity_defect(u) -> float:
    u = u.matrix if isinstance(u, Operator) else np.asarray(u)
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def _gauge(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for j in range(out.shape[1]):
        v = out[:, j]
        k = np.argmax(np.abs(v))
        out[:, j] = v * np.exp(-1j * np.angle(v[k])) / np.linalg.norm(v)
    return out


def quasienergies(u_t, period: float, reference=None) -> QuasienergySpectrum:
    """Quasienergies ``eps = (i / T) log(lambda)`` folded into the zeroth zone.

    ``u_t`` must be a two-level propagator.  ``reference`` is the state the
    ``plus`` branch should overlap most at t = 0; without one, ``plus`` is the
    larger folded quasienergy.
    """
    u = u_t.matrix if isinstance(u_t, Operator) else np.asarray(u_t, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("quasienergy pairs are defined for the two-level qubit propagator")
    if unitarity_defect(u) > 1e-6:
        raise ValueError("propagator is not unitary")
    omega = 2 * np.pi / period
    lam, vecs = np.linalg.eig(u)
    eps = fold(-np.angle(lam) / period, omega)
    if reference is not None:
        ov = np.abs(vecs.conj().T @ np.asarray(reference, dtype=complex))
        ip = int(np.argmax(ov))
    else:
        ip = int(np.argmax(eps))
    order = [ip, 1 - ip]
    if abs(lam[0] - lam[1]) < 1e-8:
        # eigenvectors of a degenerate pair are arbitrary; orthonormalize
        vecs = np.linalg.qr(vecs)[0]
    return QuasienergySpectrum(float(eps[order[0]]), float(eps[order[1]]), omega,
                               _gauge(vecs[:, order]))


def upper_state(model: SystemModel, t: float = 0.0) -> np.ndarray:
    """Instantaneous upper eigenstate of the qubit Hamiltonian (spin along B)."""
    h = hamiltonian(model.qubit_only().closed(), t).matrix
    w, v = np.linalg.eigh(h)
    return v[:, -1]


def qubit_spectrum(model: SystemModel, cfg: IntegratorConfig = IntegratorConfig(),
                   n_t: int = DEFAULT_NT) -> QuasienergySpectrum:
    """Quasienergies and periodic states of the model's bare qubit."""
    q = model.qubit_only().closed()
    spec = quasienergies(monodromy(q, cfg), q.period, reference=upper_state(q))
    return periodic_states(q, spec, n_t, cfg)


def periodic_states(model: SystemModel, spectrum: QuasienergySpectrum, n_t: int = DEFAULT_NT,
                    cfg: IntegratorConfig = IntegratorConfig()) -> QuasienergySpectrum:
    """Sample ``phi_pm(t)`` on ``n_t`` uniform points ``t_j = j T / n_t``."""
    if abs(np.exp(-1j * spectrum.eps_plus * spectrum.period)
           - np.exp(-1j * spectrum.eps_minus * spectrum.period)) < 1e-8:
        raise DegenerateSpectrumError("quasienergy pair is degenerate")
    if not model.is_closed:
        raise ValueError("periodic states need a closed model")
    if n_t < 2:
        raise ValueError("n_t must be at least 2")
    _, times, samples = propagate_state(model, spectrum.vectors, 0.0, model.period, cfg, capture=n_t)
    eps = np.array([spectrum.eps_plus, spectrum.eps_minus])
    states = np.exp(1j * np.outer(times, eps))[:, None, :] * samples
    closure = float(np.abs(states[-1] - states[0]).max())
    if closure > 1e-6:
        raise IntegrationError(f"periodic states fail to close over one period ({closure:.1e})")
    return replace(spectrum, times=times[:-1], states=states[:-1])


def coupling_matrix_element(model: SystemModel, spectrum: QuasienergySpectrum, m: int, n: int,
                            cavity: int = 0) -> complex:
    """Period average of ``<phi_plus^(m)(t), n| V |phi_minus(t), n+1>``.

    ``V = g (a^dag s- + a s+)`` for the chosen cavity.  On a uniform periodic
    grid the trapezoid rule is the plain mean.
    """
    if spectrum.n_t < MIN_NT:
        raise ValueError(f"matrix elements need at least {MIN_NT} samples per period")
    cav = model.cavities[cavity]
    if not 0 <= n < cav.n_max:
        raise ValueError(f"photon sector n={n} needs n+1 <= n_max={cav.n_max}")
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    # <n| a |n+1> = sqrt(n+1); only the a s+ half of V connects these sectors
    amp = cav.g * np.sqrt(n + 1)
    bra = spectrum.state("plus", m)
    ket = spectrum.state("minus", 0)
    integrand = np.einsum("ti,ij,tj->t", bra.conj(), sp, ket)
    return complex(amp * integrand.mean())


def adiabatic_representative(model: SystemModel, spectrum: QuasienergySpectrum, m_range,
                             n: int = 0, cavity: int = 0) -> tuple[int, complex]:
    """Zone index with the largest ``|H^(m0)_+-|`` and that element."""
    vals = [(m, coupling_matrix_element(model, spectrum, m, n, cavity)) for m in m_range]
    return max(vals, key=lambda mv: abs(mv[1]))


def hybridized_states(spectrum: QuasienergySpectrum, m: int, n: int, n_max: int,
                      element: complex = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """First-order resonant pair ``(|phi_+^(m), n> +- e^{i arg H}|phi_-, n+1>) / sqrt 2``.

    Returned as ``(N_t, 2 (n_max+1))`` samples on the spectrum's grid.
    """
    ph = np.exp(1j * np.angle(element)) if element else 1.0
    fock = np.eye(n_max + 1)
    up = np.einsum("ti,j->tij", spectrum.state("plus", m), fock[n]).reshape(spectrum.n_t, -1)
    dn = np.einsum("ti,j->tij", spectrum.state("minus"), fock[n + 1]).reshape(spectrum.n_t, -1)
    return (up + ph * dn) / np.sqrt(2), (up - ph * dn) / np.sqrt(2)


@dataclass(frozen=True)
class ResonanceCondition:
    m: int
    n_ph: int
    offset: float

    @staticmethod
    def delta_for(m: int, n_ph: int, omega: float, delta_eps: float) -> float:
        """Cavity frequency at which ``n_ph Delta = m omega + delta_eps``."""
        return (m * omega + delta_eps) / n_ph


def continuous_splitting(omegas, delta_eps) -> np.ndarray:
    """Shift zeroth-zone splittings by whole multiples of omega so they vary smoothly.

    The highest frequency keeps its zeroth-zone value; every lower one takes
    the representative closest to its neighbour.  In the adiabatic regime
    this tracks the instantaneous splitting instead of jumping between zones.
    Neighbouring frequencies must be close enough that the splitting moves
    by less than omega / 2 between them.
    """
    omegas = np.asarray(omegas, dtype=float)
    de = np.asarray(delta_eps, dtype=float).copy()
    order = np.argsort(omegas)[::-1]
    prev = None
    for k in order:
        if not np.isfinite(de[k]):
            continue
        if prev is not None:
            de[k] += omegas[k] * np.round((prev - de[k]) / omegas[k])
        prev = de[k]
    return de


def resonance_map(delta: float, omega: float, delta_eps: float, m_range, n_ph_range) -> list[ResonanceCondition]:
    """Offsets ``n_ph Delta - m omega - delta_eps`` sorted by magnitude."""
    if not omega > 0:
        raise ValueError("omega must be positive")
    out = [ResonanceCondition(int(m), int(k), float(k * delta - m * omega - delta_eps))
           for m in m_range for k in n_ph_range]
    return sorted(out, key=lambda r: (abs(r.offset), r.n_ph, r.m))


def adiabatic_detuning(delta: float, B0: float) -> float:
    """``Delta - B0``, the detuning that vanishes on the adiabatic resonance."""
    return delta - B0


def write_states_csv(path, spectrum: QuasienergySpectrum):
    if spectrum.states is None:
        raise ValueError("periodic states have not been computed")
    d = spectrum.states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = ["t"]
        for b in ("plus", "minus"):
            for i in range(d):
                head += [f"re_{b}_{i}", f"im_{b}_{i}"]
        w.writerow(head)
        for t, s in zip(spectrum.times, spectrum.states):
            row = [t]
            for col in range(2):
                for z in s[:, col]:
                    row += [z.real, z.imag]
            w.writerow([f"{x:.12g}" for x in row])


def write_resonances_csv(path, conditions):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "n_ph", "offset"])
        for r in conditions:
            w.writerow([r.m, r.n_ph, f"{r.offset:.12g}"])
