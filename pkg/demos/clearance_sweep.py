"""
Interior fraction and sample bound across clearances
====================================================

Sweeps delta on the bundled two-link arm scene. Small delta gives a fine
feature grid and a huge bound; large delta leaves too little interior and
the tolerable interior error goes negative. The bound is smallest in between.
"""

import math

import numpy as np

from certicd.experiments import estimate_delta_max, sweep
from certicd.scenes import load_scene

scene = load_scene("two-link")
grid = np.geomspace(1e-3, 0.2, 25)
rows = sweep(scene, [0.05, 0.1, 0.2], grid, samples=50_000, seed=0)

for eps in (0.05, 0.1, 0.2):
    sel = [r for r in rows if r.epsilon == eps]
    feasible = [r for r in sel if math.isfinite(r.m_bound)]
    best = min(feasible, key=lambda r: r.m_bound)
    print(f"eps={eps}: {len(feasible)}/{len(sel)} feasible, "
          f"best delta={best.delta:.4f} with m_bound={best.m_bound:.3e} (p_hat={best.p_hat:.3f})")

# The largest clearance that still leaves a 1 - eps interior.
for eps in (0.05, 0.1, 0.2):
    est = estimate_delta_max(scene, eps, samples=100_000)
    print(f"delta_max(eps={eps}) ~ {est.delta:.4f}  (p={est.p_at_delta:.4f} +/- {est.half_width:.4f})")
