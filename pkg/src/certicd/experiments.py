"""Monte Carlo experiments around the interior fraction and the guarantees.

Interior membership here uses ``clearance >= delta``. Every routine draws one
uniform sample set from its seed and reuses it for all ``delta`` values
(common random numbers), so the estimated interior fraction is exactly
non-increasing in ``delta`` and sweeps are byte-reproducible.
"""

import csv
import io
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import stats
from .featuremap import build_reference_separator, derive_params
from .rng import derive_seed
from .scenes import FORBIDDEN, FREE

DEFAULT_SAMPLES = 100_000
CI_XI = 0.05
SWEEP_HEADER = ("epsilon", "delta", "p_hat", "eps_interior", "m_bound", "samples", "seed")
INFEASIBLE = "infeasible"


class FractionEstimate(NamedTuple):
    fraction: float
    half_width: float


def _clearances(scene, samples, seed):
    return scene.clearance(scene.sample_uniform(samples, seed))


def _fraction(clearance, delta):
    count = int(np.count_nonzero(clearance >= delta))
    p = count / len(clearance)
    return count, p


def estimate_interior_fraction(scene, delta, samples=DEFAULT_SAMPLES, seed=0):
    """Fraction of uniform samples with clearance >= delta, and its 95% half-width."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    _, p = _fraction(_clearances(scene, samples, seed), delta)
    return FractionEstimate(p, stats.binomial_upper_bound(p, samples, CI_XI).half_width)


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    delta: float
    p_hat: float
    eps_interior: float
    m_bound: float
    samples: int
    seed: int

    def csv_fields(self):
        m_bound = INFEASIBLE if math.isinf(self.m_bound) else f"{self.m_bound:.17g}"
        return [f"{self.epsilon:.17g}", f"{self.delta:.17g}", f"{self.p_hat:.17g}",
                f"{self.eps_interior:.17g}", m_bound, str(self.samples), str(self.seed)]


def sweep(scene, epsilons, delta_grid, xi=0.05, samples=DEFAULT_SAMPLES, seed=0, destination=None):
    """Interior fraction, tolerable interior error and sample bound over a delta grid.

    Rows are ordered by epsilon (as given), then delta ascending. ``m_bound``
    is ``inf`` (written ``infeasible``) wherever the interior error is not
    positive or the bound overflows. When ``destination`` is given the CSV is
    written there as well.
    """
    grid = np.asarray(delta_grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("delta_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("delta_grid must be strictly increasing")
    if grid[0] <= 0 or grid[-1] >= math.sqrt(scene.d):
        raise ValueError("delta_grid must lie inside (0, sqrt(d))")
    clearance = _clearances(scene, samples, seed)
    counts = [_fraction(clearance, delta) for delta in grid]
    rows = []
    for eps in epsilons:
        for delta, (count, p) in zip(grid, counts):
            eps_int = stats.interior_error(eps, xi, count, samples)
            bound = stats.sample_complexity_bound(min(eps_int, 1.0), xi, delta, scene.d) if eps_int > 0 else math.inf
            rows.append(SweepRow(float(eps), float(delta), p, eps_int, bound, int(samples), int(seed)))
    if destination is not None:
        write_sweep_csv(rows, destination)
    return rows


def sweep_csv_text(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    writer.writerows(row.csv_fields() for row in rows)
    return buf.getvalue()


def write_sweep_csv(rows, destination):
    text = sweep_csv_text(rows)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def read_sweep_csv(source):
    """Parse sweep CSV text back into ``SweepRow`` objects."""
    reader = csv.DictReader(io.StringIO(source))
    if tuple(reader.fieldnames or ()) != SWEEP_HEADER:
        raise ValueError(f"unexpected sweep header {reader.fieldnames}")
    return [SweepRow(float(r["epsilon"]), float(r["delta"]), float(r["p_hat"]),
                     float(r["eps_interior"]),
                     math.inf if r["m_bound"] == INFEASIBLE else float(r["m_bound"]),
                     int(r["samples"]), int(r["seed"])) for r in reader]


@dataclass(frozen=True)
class DeltaMaxEstimate:
    delta: float
    lower: float
    upper: float
    p_at_delta: float
    half_width: float
    degenerate: bool


def estimate_delta_max(scene, epsilon, samples=DEFAULT_SAMPLES, seed=0, tolerance=1e-4):
    """Largest delta whose Monte Carlo interior fraction is still >= 1 - epsilon.

    Bisection on a fixed sample set, stopped once the bracket is narrower
    than ``tolerance``; ``delta`` is the lower (feasible) end. The estimate
    is subject to Monte Carlo error: ``half_width`` is the 95% half-width of
    the fraction at the returned delta. If even ``sqrt(d)`` qualifies the
    result is flagged ``degenerate``.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    clearance = _clearances(scene, samples, seed)
    target = 1.0 - epsilon
    top = math.sqrt(scene.d)

    def p_of(delta):
        return _fraction(clearance, delta)[1]

    def finish(delta, lo, hi, degenerate):
        p = p_of(delta)
        hw = stats.binomial_upper_bound(p, samples, CI_XI).half_width
        return DeltaMaxEstimate(delta, lo, hi, p, hw, degenerate)

    if p_of(top) >= target:
        return finish(top, top, top, True)
    lo, hi = 0.0, top
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if p_of(mid) >= target:
            lo = mid
        else:
            hi = mid
    return finish(lo, lo, hi, False)


@dataclass(frozen=True)
class EvalReport:
    test_count: int
    errors: int
    interior_count: int
    interior_errors: int
    boundary_count: int
    boundary_errors: int
    false_positives: int
    false_negatives: int
    loss: float
    interior_loss: float
    boundary_loss: float
    loss_upper: float
    interior_loss_upper: float
    boundary_loss_upper: float
    delta: float
    seed: int

    def lines(self):
        return [f"{name}={getattr(self, name)!r}" for name in self.__dataclass_fields__]


def _rate(errors, count):
    return errors / count if count else 0.0


def _upper(loss, count):
    return stats.binomial_upper_bound(loss, count, CI_XI).upper if count else 1.0


def evaluation_seed(training_seed):
    return derive_seed(training_seed, "eval")


def evaluate(lcd, scene, test_count=DEFAULT_SAMPLES, seed=None, delta=None):
    """Held-out 0-1 loss of a trained detector against the exact oracle.

    The test stream is seeded with a hash of ``seed`` (the model's training
    seed by default) and an ``eval`` tag, so it never coincides with the
    training stream. Loss is split between the delta-interior (clearance >= delta, delta
    defaulting to the model's) and the delta-boundary. A false positive is a
    free configuration reported as forbidden.
    """
    if scene.d != lcd.d:
        raise ValueError("scene and model dimensions differ")
    if seed is None:
        seed = lcd.provenance.get("seed", 0)
    delta = lcd.provenance.get("delta", lcd.featuremap.delta) if delta is None else delta
    x = scene.sample_uniform(test_count, evaluation_seed(seed))
    truth, clearance = scene.label_and_clearance(x)
    pred = lcd.classify(x)
    wrong = pred != truth
    interior = clearance >= delta
    n_int = int(interior.sum())
    n_bnd = int(test_count - n_int)
    e_int = int(np.count_nonzero(wrong & interior))
    e_bnd = int(np.count_nonzero(wrong & ~interior))
    errors = e_int + e_bnd
    loss, l_int, l_bnd = _rate(errors, test_count), _rate(e_int, n_int), _rate(e_bnd, n_bnd)
    return EvalReport(
        test_count=int(test_count), errors=errors,
        interior_count=n_int, interior_errors=e_int,
        boundary_count=n_bnd, boundary_errors=e_bnd,
        false_positives=int(np.count_nonzero((pred == FORBIDDEN) & (truth == FREE))),
        false_negatives=int(np.count_nonzero((pred == FREE) & (truth == FORBIDDEN))),
        loss=loss, interior_loss=l_int, boundary_loss=l_bnd,
        loss_upper=_upper(loss, test_count),
        interior_loss_upper=_upper(l_int, n_int),
        boundary_loss_upper=_upper(l_bnd, n_bnd),
        delta=float(delta), seed=int(seed),
    )


def verify_margin(scene, delta, samples=10_000, seed=0, probes_per_cell=9, cap=None):
    """Build the reference separator for ``delta`` and measure its margin.

    Draws uniform configurations until ``samples`` of them lie in the
    delta-interior and returns ``(min normalised margin, guaranteed bound)``.
    """
    params = derive_params(scene.d, delta, cap=cap)
    sep = build_reference_separator(scene, params, probes_per_cell=probes_per_cell)
    kept_x, kept_y, have = [], [], 0
    batch = max(4 * samples, 1024)
    for round_ in range(1000):
        x = scene.sample_uniform(batch, seed if round_ == 0 else derive_seed(seed, f"margin-{round_}"))
        y, cl = scene.label_and_clearance(x)
        keep = cl >= delta
        kept_x.append(x[keep])
        kept_y.append(y[keep])
        have += int(keep.sum())
        if have >= samples:
            break
    else:
        raise RuntimeError("delta-interior too small to collect the requested samples")
    x = np.concatenate(kept_x)[:samples]
    y = np.concatenate(kept_y)[:samples]
    margins = sep.normalized_margins(x, y)
    return float(margins.min()), params.margin_lower_bound()
