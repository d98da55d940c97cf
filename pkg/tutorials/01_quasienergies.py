"""Quasienergies of a qubit in a rotating field, numerics against the closed form.

Run: python tutorials/01_quasienergies.py
"""
import numpy as np

from floqstab.drives import qubit_cavity_model
from floqstab.floquet import (circular_quasienergies, coupling_matrix_element, monodromy,
                              qubit_spectrum, quasienergies, upper_state)
from floqstab.lindblad import IntegratorConfig

cfg = IntegratorConfig(2000)

# sweep the drive frequency at fixed amplitude B0 = 1
print(" omega     eps_plus      exact")
for omega in np.geomspace(0.1, 10, 7):
    m = qubit_cavity_model(1.0, omega, 1.0, 1.0, 0.0, 0.0, n_max=2)
    spec = quasienergies(monodromy(m.qubit_only(), cfg), m.period, reference=upper_state(m))
    print(f"{omega:6.3f}  {spec.eps_plus:+.9f}  {circular_quasienergies(1.0, omega)[0]:+.9f}")

# at omega = B0 the coupling to the cavity lives in the first three Floquet zones only
m = qubit_cavity_model(1.0, 1.0, 1.414, 1.0, 0.05, 0.0025, n_max=3)
spec = qubit_spectrum(m, cfg, 256)
for k in range(5):
    print(f"m = {k}: |<phi_plus^(m), 0| V |phi_minus, 1>| = {abs(coupling_matrix_element(m, spec, k, 0)):.6f}")
