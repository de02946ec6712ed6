"""Learned collision detectors with statistical guarantees.

``lbcd`` trains one detector for a fixed clearance ``delta`` and sample count
``m``: sample, keep the samples with clearance above ``delta``, check that the
tolerable interior error is positive (C1) and that enough interior samples
were drawn (C2), then fit a Hard-SVM on the grid features of the interior
samples. ``adaptive_lcd`` repeats this, doubling ``m`` and halving ``delta``
after every failure.

Two modes exist. ``certified`` enforces both gates and raises ``LbcdFailure``
when either holds. ``empirical`` trains regardless and keeps the (failed)
gate outcomes in the report; such a model carries no certificate.
"""

import math
import os
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import stats
from .featuremap import FEATURE_CAP_ENV, FeatureCapError, FeatureMapParams, derive_params, feature_cap
from .rng import GENERATOR_ID, derive_seed
from .svm import LinearModel, SolverConfig, train_hard_svm

CERTIFIED = "certified"
EMPIRICAL = "empirical"
MODES = (CERTIFIED, EMPIRICAL)

DEFAULT_M0 = 1000
DEFAULT_ITERATION_CAP = 20
DEFAULT_MAX_SAMPLES = 10**7


@dataclass(frozen=True)
class GuaranteeReport:
    sample_count: int
    interior_count: int
    p_hat: float
    epsilon_interior: float
    required_m: float
    c1: bool
    c2: bool
    normal_approx_valid: bool
    confidence: float

    @property
    def failed(self):
        return self.c1 or self.c2

    def lines(self):
        return [f"{name}={getattr(self, name)}" for name in self.__dataclass_fields__]


def guarantee_report(epsilon, xi, delta, d, interior_count, sample_count):
    """Evaluate the two gates for an observed interior count."""
    eps_int = stats.interior_error(epsilon, xi, interior_count, sample_count)
    required = stats.required_samples(eps_int, xi, delta, d) if eps_int > 0 else math.inf
    p_hat = interior_count / sample_count
    return GuaranteeReport(
        sample_count=int(sample_count),
        interior_count=int(interior_count),
        p_hat=p_hat,
        epsilon_interior=eps_int,
        required_m=required,
        c1=bool(eps_int <= 0),
        c2=bool(interior_count < required),
        normal_approx_valid=stats.normal_approx_valid(p_hat, sample_count),
        confidence=1.0 - xi,
    )


class LbcdFailure(Exception):
    """The (delta, m) run hit condition C1 and/or C2."""

    def __init__(self, report):
        flags = [name for name, hit in (("C1", report.c1), ("C2", report.c2)) if hit]
        super().__init__(f"guarantee gate failed: {'+'.join(flags)} "
                         f"(eps_interior={report.epsilon_interior:.6g}, "
                         f"interior={report.interior_count}, required={report.required_m})")
        self.report = report


class TraceEntry(NamedTuple):
    m: int
    delta: float
    seed: int
    outcome: str
    epsilon_interior: float
    required_m: float


def format_trace(trace):
    return ";".join(f"{t.m}@{t.delta!r}:{t.outcome}" for t in trace)


class InfeasibleAtThisScale(RuntimeError):
    """The adaptive search would need more samples, features or iterations than allowed."""

    def __init__(self, reason, trace):
        super().__init__(f"infeasible-at-this-scale: {reason}")
        self.reason = reason
        self.trace = list(trace)


class TrainingFailure(RuntimeError):
    """The interior training set could not be fitted (e.g. only one class present)."""


@dataclass(frozen=True)
class TrainedLcd:
    model: LinearModel
    featuremap: FeatureMapParams
    guarantee: GuaranteeReport
    mode: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model.w.shape != (self.featuremap.dim,):
            raise ValueError("model weight length does not match the feature map")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    @property
    def d(self):
        return self.featuremap.d

    def decision_value(self, x):
        return self.model.decision_value(self.featuremap.phi(x))

    def classify(self, x):
        """+1 (forbidden) or -1 (free); a zero decision value counts as forbidden."""
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1] != self.d:
            raise ValueError(f"expected configurations of dimension {self.d}")
        out = np.where(self.decision_value(arr) >= 0.0, 1, -1)
        return int(out) if arr.ndim == 1 else out


def classify(lcd, x):
    return lcd.classify(x)


def _check_inputs(epsilon, xi, delta, d, m, mode):
    stats.GuaranteeParams(epsilon, xi, delta, d)
    if int(m) < 1:
        raise ValueError("m must be >= 1")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")


def _solver_provenance(config, model):
    diag = model.diagnostics
    return {
        "solver.C": float(config.C),
        "solver.tol": float(config.tol),
        "solver.max_iter": int(config.max_iter),
        "solver.fit_intercept": bool(config.fit_intercept),
        "solver.iterations": int(diag.iterations),
        "solver.kkt_gap": float(diag.kkt_gap),
        "solver.max_violation": float(diag.max_violation),
        "solver.margin": float(diag.margin),
        "solver.support_vectors": int(diag.support_vectors),
    }


def interior_training_set(scene, delta, m, seed):
    """Replay the sampling of a run: returns (samples, labels, clearance, interior mask)."""
    samples = scene.sample_uniform(m, seed)
    labels, clearance = scene.label_and_clearance(samples)
    return samples, labels, clearance, clearance > delta


def lbcd(scene, epsilon, xi, delta, m, seed, *, mode=CERTIFIED, solver=None, cap=None):
    """One (delta, m) run; returns a ``TrainedLcd`` or raises ``LbcdFailure``."""
    d = scene.d
    _check_inputs(epsilon, xi, delta, d, m, mode)
    solver = solver or SolverConfig()
    cap = feature_cap() if cap is None else int(cap)

    samples, labels, _, interior = interior_training_set(scene, delta, m, seed)
    report = guarantee_report(epsilon, xi, delta, d, int(interior.sum()), int(m))
    if mode == CERTIFIED and report.failed:
        raise LbcdFailure(report)

    params = derive_params(d, delta, cap=cap)
    y = labels[interior]
    if len(y) < 2 or np.all(y == y[0]):
        raise TrainingFailure(f"interior sample set has {len(y)} points and "
                              f"{len(np.unique(y))} class(es); Hard-SVM needs both classes")
    model = train_hard_svm(params.phi(samples[interior]), y, solver)

    provenance = {
        "scene": scene.scene_id,
        "seed": int(seed),
        "m": int(m),
        "delta": float(delta),
        "epsilon": float(epsilon),
        "xi": float(xi),
        "generator": GENERATOR_ID,
        "feature_cap": int(cap),
    }
    if os.environ.get(FEATURE_CAP_ENV):
        provenance["feature_cap_env"] = os.environ[FEATURE_CAP_ENV]
    provenance.update(_solver_provenance(solver, model))
    return TrainedLcd(model=model, featuremap=params, guarantee=report, mode=mode,
                      provenance=provenance)


def adaptive_lcd(scene, epsilon, xi, seed, *, m0=DEFAULT_M0, delta0=None,
                 iteration_cap=DEFAULT_ITERATION_CAP, mode=CERTIFIED, solver=None,
                 cap=None, max_samples=DEFAULT_MAX_SAMPLES):
    """Search over (delta, m) by halving delta and doubling m until ``lbcd`` succeeds.

    Iteration ``k`` samples with ``seed`` for ``k = 0`` and with a seed derived
    from it afterwards. Raises ``InfeasibleAtThisScale`` once the iteration
    cap, the feature cap, or the sample budget is reached. In certified mode
    the budget is also checked against the sample-complexity bound at the
    current delta with the most optimistic interior error (``epsilon``
    itself); that bound only grows as delta shrinks, so exceeding it ends the
    search immediately.
    """
    d = scene.d
    delta = math.sqrt(d) / 4.0 if delta0 is None else float(delta0)
    m = int(m0)
    _check_inputs(epsilon, xi, delta, d, m, mode)
    cap = feature_cap() if cap is None else int(cap)
    trace = []
    for k in range(int(iteration_cap)):
        run_seed = int(seed) if k == 0 else derive_seed(seed, f"adaptive-iter-{k}")
        if m > max_samples:
            trace.append(TraceEntry(m, delta, run_seed, "sample-budget", math.nan, math.nan))
            raise InfeasibleAtThisScale(f"m={m} exceeds the sample budget {max_samples}", trace)
        if mode == CERTIFIED:
            floor = stats.required_samples(epsilon, xi, delta, d)
            if floor > max_samples:
                trace.append(TraceEntry(m, delta, run_seed, "sample-budget", math.nan, floor))
                raise InfeasibleAtThisScale(
                    f"sample complexity at delta={delta:.6g} is at least {floor:.4g}, "
                    f"beyond the sample budget {max_samples}", trace)
        try:
            derive_params(d, delta, cap=cap)
        except FeatureCapError as exc:
            trace.append(TraceEntry(m, delta, run_seed, "feature-cap", math.nan, math.nan))
            raise InfeasibleAtThisScale(str(exc), trace) from exc
        try:
            lcd = lbcd(scene, epsilon, xi, delta, m, run_seed, mode=mode, solver=solver, cap=cap)
        except LbcdFailure as fail:
            rep = fail.report
            outcome = "+".join(n for n, hit in (("c1", rep.c1), ("c2", rep.c2)) if hit)
            trace.append(TraceEntry(m, delta, run_seed, outcome, rep.epsilon_interior, rep.required_m))
            m, delta = 2 * m, delta / 2.0
            continue
        rep = lcd.guarantee
        trace.append(TraceEntry(m, delta, run_seed, "success", rep.epsilon_interior, rep.required_m))
        provenance = dict(lcd.provenance)
        provenance["seed"] = int(seed)
        provenance["run_seed"] = run_seed
        provenance["trace"] = format_trace(trace)
        return replace(lcd, provenance=provenance)
    raise InfeasibleAtThisScale(f"no success within {iteration_cap} iterations", trace)
