"""
A certified detector for a one-dimensional obstacle
===================================================

The forbidden set is the interval [0.25, 0.75], so the interior fraction is
1 - 4 delta and the sample bound stays small. This makes a full certified
run cheap enough for a laptop.
"""

from certicd import stats
from certicd.experiments import evaluate
from certicd.lcd import LbcdFailure, adaptive_lcd, lbcd
from certicd.scenes import DiscScene

scene = DiscScene([0.5], 0.25)
epsilon, xi = 0.9, 0.05

# How many samples the bound asks for at a few clearances.
for delta in (0.2, 0.1, 0.05):
    print(f"delta={delta:<5} bound(eps={epsilon}) = {stats.sample_complexity_bound(epsilon, xi, delta, 1):,.0f}")

# Too few samples: the interior-count gate fails and nothing is trained.
try:
    lbcd(scene, epsilon, xi, 0.1, 500, seed=0)
except LbcdFailure as fail:
    print("\nm=500 rejected:", fail)

# Enough samples: a certified model with its guarantee report.
lcd = lbcd(scene, epsilon, xi, 0.1, 16_000, seed=0)
print("\nm=16000 accepted")
for line in lcd.guarantee.lines():
    print("  " + line)

# The adaptive search halves delta and doubles m until both gates pass.
lcd = adaptive_lcd(scene, epsilon, xi, seed=0, m0=8_000, delta0=0.24)
print("\nadaptive trace:", lcd.provenance["trace"])

report = evaluate(lcd, scene, test_count=50_000)
print(f"held-out loss {report.loss:.4f} (interior {report.interior_loss:.4f}, "
      f"boundary {report.boundary_loss:.4f})")
