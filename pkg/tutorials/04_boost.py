"""Photon pumping into a boost cavity, with and without the stabilizing cavity.

A small truncation and few periods keep this under a minute; the acceptance
run uses n_b = 45 and twelve periods.

Run: python tutorials/04_boost.py
"""
from floqstab.experiments.boost import compare_boost

runs = compare_boost(periods=4, n_b=24, n_s=3)
for label, r in runs.items():
    print(label)
    for M in range(5):
        s = r.at_period(M)
        print(f"  M = {M}: <n_b> = {s['mean']:6.2f}  Std = {s['std']:.2f}  mode = {s['mode']}")
    print(f"  pump rate {r.pump_rate(4):.3f} photons per period")
