import numpy as np
import pytest
from scipy.linalg import expm

from floqstab.algebra import E, G
from floqstab.drives import Cavity, DriveProtocol, SystemModel, boost_model, hamiltonian, jump_operators, qubit_cavity_model
from floqstab.lindblad import (DensityMatrix, Generator, IntegrationError, IntegratorConfig, auto_steps, lindblad_rhs,
                               propagate_density, propagate_state)


def liouvillian(model, t=0.0):
    """Column-stacked Liouvillian built directly from H and the jump operators."""
    h = hamiltonian(model, t).matrix
    d = h.shape[0]
    eye = np.eye(d)
    out = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for op in jump_operators(model):
        l = op.matrix
        ldl = l.conj().T @ l
        out += np.kron(l.conj(), l) - 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
    return out


def static_model(bz=0.0, bx=0.0, **kw):
    kw.setdefault("gamma", 0.0)
    return SystemModel(DriveProtocol("static", 1.0, bx=bx, bz=bz), **kw)


def test_amplitude_damping_decay():
    gam = 0.3
    m = static_model(bz=0.8, gamma=gam)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    t1 = 3 / gam
    out = propagate_density(m, rho0, 0.0, t1, IntegratorConfig(400), capture=10)
    pe = np.real(out.samples[:, E, E])
    assert np.abs(pe - np.exp(-gam * out.times)).max() < 1e-6
    assert abs(out.state.matrix[E, E] - np.exp(-3)) < 1e-6
    assert out.trace_drift < 1e-10


def test_dephasing_kills_coherence_only():
    m = static_model(gamma_phi=0.2)
    psi = np.array([1, 1]) / np.sqrt(2)
    out = propagate_density(m, np.outer(psi, psi), 0.0, 5.0, IntegratorConfig(200))
    r = out.state.matrix
    assert np.allclose(np.diag(r), 0.5)
    # L = sqrt(gamma_phi / 2) sz damps coherences at rate gamma_phi
    assert abs(abs(r[0, 1]) - 0.5 * np.exp(-0.2 * 5.0)) < 1e-8


def test_closed_evolution_keeps_purity():
    m = qubit_cavity_model(1.0, 0.8, 1.2, 0.1, 0.0, 0.0, n_max=3)
    psi = m.layout.basis_state(E, 0)
    out = propagate_density(m, DensityMatrix.from_state(m.layout, psi), 0.0, 3 * m.period, IntegratorConfig(400))
    assert abs(out.state.purity() - 1) < 1e-8
    # agrees with the Schrodinger evolution
    phi = propagate_state(m, psi, 0.0, 3 * m.period, IntegratorConfig(400))
    assert np.abs(out.state.matrix - np.outer(phi, phi.conj())).max() < 1e-8


def test_matches_matrix_exponential_for_static_generator():
    m = SystemModel(DriveProtocol("static", 1.0, bx=0.4, bz=0.9), (Cavity(1.1, 0.2, 0.15, 3),), gamma=0.05,
                    gamma_phi=0.02)
    d = m.layout.total_dim
    rng = np.random.default_rng(3)
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho0 = x @ x.conj().T
    rho0 /= np.trace(rho0)
    t1 = 2.5 * m.period
    ref = (expm(liouvillian(m) * t1) @ rho0.reshape(-1, order="F")).reshape(d, d, order="F")
    for frame in (True, False):
        out = propagate_density(m, rho0, 0.0, t1, IntegratorConfig(800, interaction_frame=frame))
        assert np.abs(out.state.matrix - ref).max() < 1e-9


def test_rhs_matches_liouvillian_in_lab_frame():
    m = qubit_cavity_model(1.0, 0.9, 1.4, 0.05, 0.05, 0.0025, n_max=2, gamma_phi=0.01)
    d = m.layout.total_dim
    rng = np.random.default_rng(0)
    rho = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    for t in (0.0, 1.7):
        ref = (liouvillian(m, t) @ rho.reshape(-1, order="F")).reshape(d, d, order="F")
        assert np.abs(lindblad_rhs(m, rho, t) - ref).max() < 1e-12


def test_rk4_fourth_order():
    m = qubit_cavity_model(20.0, 1.0, 20.0, 1.0, 0.5, 0.1, n_max=2)
    psi = m.layout.basis_state(E, 0)
    rho0 = np.outer(psi, psi)
    ref = propagate_density(m, rho0, 0.0, m.period, IntegratorConfig(12800)).state.matrix
    errs = [np.abs(propagate_density(m, rho0, 0.0, m.period, IntegratorConfig(n)).state.matrix - ref).max()
            for n in (400, 800, 1600)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(np.log2(ratios) - 4) < 0.3), ratios


def test_boost_step_halving():
    from floqstab.experiments.boost import boost_run

    m = boost_model(n_b=12, n_s=3)
    a, b, c = (boost_run(m, periods=2, n_b0=4, cfg=IntegratorConfig(n), samples_per_period=2).P
               for n in (1000, 2000, 4000))
    e1, e2 = np.abs(a - c).max(), np.abs(b - c).max()
    # the default 1000 steps per period is accurate to ~1e-5 in P(n_b)
    assert e1 < 1e-5
    assert 10 < e1 / e2 < 25


def test_interaction_frame_disabled_for_mixed_frequency_jumps():
    # sigma_x-like loss mixes frequencies, so the generator must stay in the lab frame
    m = qubit_cavity_model(1.0, 1.0, 1.0, 0.05, 0.05, 0.0, n_max=2)
    assert Generator(m).frame
    assert not Generator(m, interaction_frame=False).frame


def test_trace_drift_raises():
    m = qubit_cavity_model(200.0, 1.0, 200.0, 5.0, 5.0, 1.0, n_max=2)
    psi = m.layout.basis_state(E, 0)
    with pytest.raises(IntegrationError):
        propagate_density(m, np.outer(psi, psi), 0.0, m.period, IntegratorConfig(100))


def test_propagate_state_warns_on_open_model():
    m = qubit_cavity_model(1.0, 1.0, 1.0, 0.05, 0.05, 0.0, n_max=1)
    with pytest.warns(UserWarning):
        propagate_state(m, m.layout.basis_state(G, 0), 0.0, 1.0, IntegratorConfig(100))


def test_auto_steps_and_density_checks():
    m = qubit_cavity_model(1.0, 0.25, 3.0, 0.05, 0.05, 0.0, n_max=2)
    n = auto_steps(m, 0.2)
    assert n == int(np.ceil(m.period * 3.0 / 0.2))
    assert auto_steps(m, 0.2, multiple=16) % 16 == 0
    dm = DensityMatrix.maximally_mixed(m.layout)
    dm.check()
    assert np.isclose(dm.purity(), 1 / m.layout.total_dim)
    with pytest.raises(ValueError):
        DensityMatrix(m.layout, np.diag([1.5] + [-0.5] + [0] * 4).astype(complex)).check()
