import numpy as np
import pytest

from floqstab.algebra import E, G
from floqstab.drives import Cavity, DriveProtocol, SystemModel, qubit_cavity_model
from floqstab.floquet import monodromy, qubit_spectrum
from floqstab.lindblad import IntegratorConfig, propagate_density
from floqstab.steadystate import (FloquetSuperoperator, build_superoperator, evolve, observable_relaxation_rate,
                                  steady_state, unvec, vec)


def test_vec_is_column_stacking():
    x = np.arange(9).reshape(3, 3) + 1j
    v = vec(x)
    assert v[1] == x[1, 0]
    assert v[3] == x[0, 1]
    assert np.array_equal(unvec(v), x)
    a, b = np.random.default_rng(1).normal(size=(2, 3, 3))
    assert np.allclose(vec(a @ x @ b), np.kron(b.T, a) @ v)


def test_amplitude_damping_channel():
    gam, T = 0.2, 2 * np.pi / 1.5
    m = SystemModel(DriveProtocol("static", 1.5, bz=0.7), gamma=gam)
    s = build_superoperator(m, IntegratorConfig(400))
    p = np.exp(-gam * T)
    rho = np.array([[0.6, 0.2 + 0.1j], [0.2 - 0.1j, 0.4]])
    out = s.apply(rho)
    assert abs(out[E, E] - 0.6 * p) < 1e-9
    assert abs(out[G, G] - (0.4 + 0.6 * (1 - p))) < 1e-9
    # H = 0.35 sz rotates the coherence while it decays at gamma / 2
    assert abs(out[E, G] - rho[E, G] * np.sqrt(p) * np.exp(-1j * 0.7 * T)) < 1e-9


def test_unitary_channel_is_conj_u_kron_u():
    m = qubit_cavity_model(1.0, 0.9, 1.3, 0.1, 0.0, 0.0, n_max=2)
    cfg = IntegratorConfig(1000)
    u = monodromy(m, cfg).matrix
    s = build_superoperator(m, cfg)
    assert np.abs(s.matrix - np.kron(u.conj(), u)).max() < 1e-8
    assert abs(s.spectral_radius() - 1) < 1e-8


def test_channel_properties_driven_open_system():
    m = qubit_cavity_model(1.0, 1.0, 1.4142, 0.05, 0.05, 0.0025, n_max=3, gamma_phi=0.01)
    cfg = IntegratorConfig(400)
    s = build_superoperator(m, cfg)
    assert s.trace_defect() < 1e-8
    assert s.choi_min_eigenvalue() > -1e-6
    assert s.spectral_radius() < 1 + 1e-8
    d = m.layout.total_dim
    rng = np.random.default_rng(7)
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    rho /= np.trace(rho)
    direct = propagate_density(m, rho, 0.0, m.period, cfg).state.matrix
    assert np.abs(s.apply(rho) - direct).max() < 1e-6


def test_dark_state_of_undriven_cavity():
    m = SystemModel(DriveProtocol("static", 1.0, bz=1.2), (Cavity(1.2, 0.1, 0.05, 3),), gamma=0.01)
    res = steady_state(build_superoperator(m, IntegratorConfig(200)), m, IntegratorConfig(200))
    psi = m.layout.basis_state(G, 0)
    assert np.abs(res.state.matrix - np.outer(psi, psi)).max() < 1e-8
    assert res.n_unit == 1
    assert res.stabilization_rate > 0


def test_fidelity_one_for_relaxation_into_lower_state():
    # static field along z: phi_minus is |g>, and relaxation pumps into it
    m = SystemModel(DriveProtocol("static", 3.0, bz=1.0), gamma=0.1)
    cfg = IntegratorConfig(200)
    res = steady_state(build_superoperator(m, cfg), m, cfg, target=qubit_spectrum(m, cfg, 64))
    assert abs(res.fidelity - 1) < 1e-8


def test_fidelity_half_for_pure_dephasing():
    m = SystemModel(DriveProtocol("circular", 0.8, B0=1.0), gamma_phi=0.05)
    cfg = IntegratorConfig(400)
    res = steady_state(build_superoperator(m, cfg), m, cfg, target=qubit_spectrum(m, cfg, 64))
    assert abs(res.fidelity - 0.5) < 1e-8
    assert np.allclose(res.state.matrix, np.eye(2) / 2, atol=1e-8)


def test_resonant_point_fidelity_and_times():
    m = qubit_cavity_model(1.0, 1.0, 1.414, 0.05, 0.05, 0.0025, n_max=4)
    cfg = IntegratorConfig(400)
    target = qubit_spectrum(m, IntegratorConfig(2000), 256)
    res = steady_state(build_superoperator(m, cfg), m, cfg, target=target)
    assert abs(res.fidelity - 0.9544) < 1e-3
    # the slowest mode is a qubit-cavity coherence that the population does not see
    assert res.observable_time < res.stabilization_time
    assert abs(res.observable_time * 0.05 - 1.945) < 0.01
    for r in res.samples:
        assert abs(np.trace(r) - 1) < 1e-10
        assert np.linalg.eigvalsh(r).min() > -1e-8


def test_snapshots_match_repropagation():
    m = qubit_cavity_model(1.0, 0.8, 1.3, 0.05, 0.05, 0.0025, n_max=2)
    cfg = IntegratorConfig(512)
    target = qubit_spectrum(m, IntegratorConfig(2048), 64)
    a = steady_state(build_superoperator(m, cfg, n_t=64), m, cfg, target=target)
    b = steady_state(build_superoperator(m, cfg), m, cfg, target=target)
    assert np.abs(a.samples - b.samples).max() < 1e-8
    assert abs(a.fidelity - b.fidelity) < 1e-9


def test_evolve_matches_propagation():
    m = qubit_cavity_model(1.0, 0.8, 1.3, 0.05, 0.05, 0.0025, n_max=2)
    cfg = IntegratorConfig(400)
    s = build_superoperator(m, cfg, n_t=8)
    psi = m.layout.basis_state(E, 0)
    times, rhos = evolve(s, np.outer(psi, psi), 3)
    assert len(times) == 25
    ref = propagate_density(m, np.outer(psi, psi), 0.0, times[13], cfg).state.matrix
    assert np.abs(rhos[13] - ref).max() < 1e-8
    with pytest.raises(ValueError):
        evolve(build_superoperator(m, cfg), np.outer(psi, psi), 1)


def test_observable_rate_ignores_invisible_modes():
    # d = 2 Liouville space with modes along the matrix units
    ev = np.array([1.0, 0.9, 0.5, 0.2])
    basis = np.eye(4)
    obs = np.array([[0.0, 0.0], [1.0, 0.0]])       # Tr(O X) = X[0, 1], i.e. vec component 2
    rho0 = np.array([[0.5, 0.3], [0.3, 0.5]])
    rate = observable_relaxation_rate(ev, basis, basis, obs, [rho0], period=2.0)
    # the slower 0.9 mode is excited but invisible, so the rate comes from 0.5
    assert np.isclose(rate, np.log(2) / 2)
    assert np.isclose(observable_relaxation_rate(ev, basis, basis, np.zeros((2, 2)), [rho0], 2.0), 0.0)


def test_save_roundtrip(tmp_path):
    m = SystemModel(DriveProtocol("static", 1.0, bz=0.3), gamma=0.1)
    s = build_superoperator(m, IntegratorConfig(100))
    s.save(tmp_path / "s.npz")
    data = np.load(tmp_path / "s.npz")
    assert np.array_equal(data["matrix"], s.matrix)
    assert isinstance(s, FloquetSuperoperator)
