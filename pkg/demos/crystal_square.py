"""Crystalline flow of a square and an L-shaped polygon under the unit-square
Wulff shape; prints facet lengths and the event log."""

import numpy as np

from anisoflow.anisotropy import Anisotropy
from anisoflow.crystalline_flow import CrystalFlowConfig, run
from anisoflow.curve import CrystalCurve

a = Anisotropy.square()
square = CrystalCurve.from_vertices([[1, -1], [1, 1], [-1, 1], [-1, -1]], a.wulff)
trace = run(square, a, CrystalFlowConfig(t_max=1.0), record_dt=0.1)
for t, c in zip(trace.times, trace.curves):
    if c is not None:
        print(f"t={t:.2f}  side={c.lengths[0]:.6f}  exact={np.sqrt(max(4 - 8 * t, 0)):.6f}")
print("extinction at", trace.extinction_time)

ell = CrystalCurve.from_vertices([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], a.wulff)
print("L-shape convexity factors:", ell.delta)
trace = run(ell, a, CrystalFlowConfig(t_max=1.0))
for ev in trace.events:
    print(ev)
