import numpy as np
import pytest

from floqstab.algebra import E, G
from floqstab.drives import (Cavity, DriveProtocol, HierarchyWarning, SystemModel, boost_model, hamiltonian,
                             jump_operators, qubit_cavity_model)


def test_circular_field():
    d = DriveProtocol("circular", 0.5, B0=2.0)
    t = np.linspace(0, 3 * d.period, 37)
    b = d.field(t)
    assert np.allclose(np.linalg.norm(b, axis=-1), 2.0)
    assert np.allclose(b[0], [0, 0, 2.0])
    assert np.allclose(d.field(t + d.period), b)


def test_semicircle_and_elliptical_fields():
    s = DriveProtocol("semicircle", 1.0, B0=3.0)
    assert np.allclose(s.field(0.0), [0, 0, -3.0])
    assert np.allclose(s.field(1.5 * np.pi), [0, 0, 0])
    e = DriveProtocol("elliptical", 1.0, bx=100.0, bz=60.0)
    lo, hi = e.field_range()
    assert np.isclose(lo, 60.0, rtol=1e-6)
    assert np.isclose(hi, 100.0, rtol=1e-6)


def test_drive_validation():
    with pytest.raises(ValueError):
        DriveProtocol("square", 1.0)
    with pytest.raises(ValueError):
        DriveProtocol("circular", 0.0)


def test_hamiltonian_structure():
    m = qubit_cavity_model(1.0, 0.7, 1.3, 0.05, 0.05, 0.0025, n_max=3)
    for t in (0.0, 0.4, 2.2):
        h = hamiltonian(m, t).matrix
        assert np.allclose(h, h.conj().T)
    # at t = 0 the field is B0 z: |e, 0> has energy +B0/2, |g, 1> has -B0/2 + Delta
    h = hamiltonian(m, 0.0).matrix
    lay = m.layout
    assert np.isclose(h[lay.basis_index(E, 0), lay.basis_index(E, 0)], 0.5)
    assert np.isclose(h[lay.basis_index(G, 1), lay.basis_index(G, 1)], -0.5 + 1.3)
    # g a^dag s-: |e, 0> -> |g, 1>
    assert np.isclose(h[lay.basis_index(G, 1), lay.basis_index(E, 0)], 0.05)


def test_qubit_frame_flips_z_and_y():
    m = qubit_cavity_model(1.0, 1.0, 1.0, 0.05, 0.0, 0.0)
    f = m.replace(qubit_frame="ground_up")
    fx, fy, fz = m.field_operators()
    gx, gy, gz = f.field_operators()
    assert np.allclose(fx, gx)
    assert np.allclose(fy, -gy)
    assert np.allclose(fz, -gz)
    with pytest.raises(ValueError):
        m.replace(qubit_frame="sideways")


def test_jump_operators_scaled():
    m = qubit_cavity_model(1.0, 1.0, 1.0, 0.05, 0.04, 0.01, n_max=2, gamma_phi=0.02)
    ls = jump_operators(m)
    assert len(ls) == 3
    a = m.cavity_op(0, "a").matrix
    assert np.allclose(ls[0].matrix, 0.2 * a)
    assert np.allclose(ls[1].matrix, 0.1 * m.qubit_op("sm").matrix)
    assert np.allclose(ls[2].matrix, 0.1 * m.qubit_op("sz").matrix)
    assert m.closed().is_closed
    assert not m.is_closed


def test_model_validation():
    with pytest.raises(ValueError):
        SystemModel(DriveProtocol("circular", 1.0, B0=1.0), (Cavity(1, 0.1, -1.0),))
    with pytest.raises(ValueError):
        SystemModel(DriveProtocol("circular", 1.0, B0=1.0), (Cavity(1, 0.1), Cavity(2, 0.1)))
    bad = qubit_cavity_model(1.0, 1.0, 1.0, 0.05, 0.5, 0.6)
    with pytest.warns(HierarchyWarning):
        msgs = bad.validate()
    assert len(msgs) == 2
    assert qubit_cavity_model(1.0, 1.0, 1.0, 0.05, 0.05, 0.0025).validate() == []


def test_boost_defaults():
    m = boost_model(n_b=5, n_s=2)
    assert m.qubit_frame == "ground_up"
    assert [c.name for c in m.cavities] == ["b", "s"]
    assert np.isclose(m.cavities[0].delta, 1.5 * (1 + np.sqrt(5)) / 2)
    assert m.cavities[1].delta == 20.0
    assert m.layout.dims == (2, 6, 3)
    # |g> is the instantaneous lower level at t = 0
    h = hamiltonian(m.qubit_only(), 0.0).matrix
    assert np.isclose(h[G, G], -10.0)
