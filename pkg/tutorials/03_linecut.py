"""F versus cavity frequency at omega = B0: ridges at m = 0, 1, 2 and none at m = 3.

Writes linecut.svg to the working directory.  About a minute on one core.

Run: python tutorials/03_linecut.py
"""
import numpy as np

from floqstab.experiments.plotting import line_svg
from floqstab.experiments.scan import detuning_linecut, prominence_near

lc = detuning_linecut(1.0, np.linspace(0.1, 3.6, 141))
for m, d in lc.resonances.items():
    print(f"m = {m}: Delta = {d:.4f}, prominence = {prominence_near(lc.deltas, lc.F, d, 0.1):.3f}")

svg = line_svg([(lc.deltas, lc.F, "F")], "Delta / B0", "F", vlines=[(d, "gray", "4 3") for d in lc.resonances.values()])
with open("linecut.svg", "w") as fh:
    fh.write(svg)
