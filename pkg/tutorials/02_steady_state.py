"""Floquet steady state at a cavity resonance and away from it.

The m = 0 resonance sits at Delta = delta_eps.  There the qubit is pumped into
phi_minus at the cavity rate; far from it only qubit relaxation acts and the
state stays close to an even mixture.

Run: python tutorials/02_steady_state.py
"""
from floqstab.drives import qubit_cavity_model
from floqstab.floquet import qubit_spectrum
from floqstab.lindblad import IntegratorConfig
from floqstab.steadystate import build_superoperator, steady_state

kappa, gamma = 0.05, 0.0025
cfg = IntegratorConfig(400)
target = qubit_spectrum(qubit_cavity_model(1.0, 1.0, 1.0, 0.05, kappa, gamma), IntegratorConfig(2000), 256)

for delta in (target.delta_eps, 2.9):
    m = qubit_cavity_model(1.0, 1.0, delta, 0.05, kappa, gamma, n_max=4)
    res = steady_state(build_superoperator(m, cfg), m, cfg, target=target)
    print(f"Delta = {delta:.4f}: F = {res.fidelity:.4f}, "
          f"t_obs = {res.observable_time:.1f} ({res.observable_time * kappa:.2f}/kappa), "
          f"slowest mode = {res.stabilization_time:.1f}, trace defect = {res.defects.get('trace', 0):.1e}")
