"""
Empirical mode on the two-link arm
==================================

The sample bound for the arm is far beyond what fits in memory, so a
certified run reports infeasible-at-this-scale. Empirical mode trains
anyway; the model carries its failed gate outcomes and no certificate.
The forbidden region is thin, so delta must be small for any forbidden
sample to land in the interior. Runs in about a minute.
"""

from certicd.experiments import evaluate
from certicd.lcd import InfeasibleAtThisScale, adaptive_lcd, lbcd
from certicd.scenes import load_scene

scene = load_scene("two-link")

try:
    adaptive_lcd(scene, 0.1, 0.05, seed=0)
except InfeasibleAtThisScale as exc:
    print("certified search:", exc.reason)

lcd = lbcd(scene, 0.1, 0.05, 0.015, 3_000, seed=0, mode="empirical")
g = lcd.guarantee
print(f"\nempirical model: n={lcd.featuremap.n}, interior={g.interior_count}/{g.sample_count}, "
      f"gates failed: c1={g.c1} c2={g.c2}")

report = evaluate(lcd, scene, test_count=50_000)
print(f"held-out loss {report.loss:.4f}: interior {report.interior_loss:.4f}, "
      f"boundary {report.boundary_loss:.4f}")
print(f"false positives {report.false_positives}, false negatives {report.false_negatives}")
