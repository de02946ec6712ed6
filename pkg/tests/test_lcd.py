import math

import numpy as np
import pytest

from certicd import stats
from certicd.featuremap import FEATURE_CAP_ENV
from certicd.lcd import (CERTIFIED, EMPIRICAL, InfeasibleAtThisScale, LbcdFailure, TrainingFailure,
                         adaptive_lcd, guarantee_report, interior_training_set, lbcd)
from certicd.rng import GENERATOR_ID
from certicd.scenes import FORBIDDEN, FREE, DiscScene


@pytest.fixture(scope="module")
def interval():
    # forbidden set [0.25, 0.75]; p(delta) = 1 - 4 delta for delta <= 0.25
    return DiscScene([0.5], 0.25)


@pytest.fixture(scope="module")
def certified_model(interval):
    return lbcd(interval, 0.9, 0.05, 0.1, 16_000, 0)


def test_c1_triggered_at_ninety_percent_interior(disc):
    delta = 0.1 / math.pi  # p(delta) = 1 - pi delta = 0.9 on this disc
    with pytest.raises(LbcdFailure) as info:
        lbcd(disc, 0.05, 0.05, delta, 10_000, 0)
    rep = info.value.report
    assert rep.p_hat == pytest.approx(0.9, abs=0.01)
    assert rep.c1 and rep.epsilon_interior <= 0
    assert "C1" in str(info.value)


def test_c2_triggered_by_tiny_sample(disc):
    with pytest.raises(LbcdFailure) as info:
        lbcd(disc, 0.9, 0.05, 0.05, 10, 0)
    rep = info.value.report
    assert not rep.c1 and rep.c2
    assert rep.interior_count < rep.required_m
    assert "C2" in str(info.value) and "C1" not in str(info.value)


def test_empirical_mode_trains_despite_gates(disc):
    lcd = lbcd(disc, 0.5, 0.5, 0.2, 5000, 0, mode=EMPIRICAL)
    assert lcd.mode == EMPIRICAL
    assert lcd.guarantee.c1  # the report still says the certificate does not hold
    x, y, _, interior = interior_training_set(disc, 0.2, 5000, 0)
    assert np.array_equal(lcd.classify(x[interior]), y[interior])


def test_certified_model_invariants(interval, certified_model):
    lcd = certified_model
    g = lcd.guarantee
    assert lcd.mode == CERTIFIED
    assert not g.c1 and not g.c2
    assert g.interior_count >= math.ceil(stats.sample_complexity_bound(g.epsilon_interior, 0.05, 0.1, 1))
    assert lcd.model.w.shape == (lcd.featuremap.n ** lcd.d,)
    x, y, _, interior = interior_training_set(interval, 0.1, 16_000, 0)
    assert np.array_equal(lcd.classify(x[interior]), y[interior])
    assert lcd.classify([0.5]) == FORBIDDEN and lcd.classify([0.02]) == FREE


def test_guarantee_report_recomputes_from_provenance(certified_model):
    prov = certified_model.provenance
    again = guarantee_report(prov["epsilon"], prov["xi"], prov["delta"], certified_model.d,
                             certified_model.guarantee.interior_count, prov["m"])
    assert again == certified_model.guarantee


def test_provenance_fields(certified_model):
    prov = certified_model.provenance
    for key in ("scene", "seed", "m", "delta", "epsilon", "xi", "generator", "solver.C", "solver.tol",
                "solver.iterations", "solver.fit_intercept"):
        assert key in prov
    assert prov["generator"] == GENERATOR_ID
    assert prov["scene"].startswith("disc-")


def test_training_uses_strict_clearance_filter(interval):
    _, _, cl, interior = interior_training_set(interval, 0.1, 1000, 3)
    assert np.array_equal(interior, cl > 0.1)


def test_single_class_interior_is_a_training_failure(disc):
    # the forbidden interior is empty once delta exceeds the radius
    with pytest.raises(TrainingFailure):
        lbcd(disc, 0.9, 0.05, 0.3, 2000, 0, mode=EMPIRICAL)


def test_input_validation(disc):
    with pytest.raises(ValueError):
        lbcd(disc, 0.1, 0.05, 0.2, 0, 0)
    with pytest.raises(ValueError):
        lbcd(disc, 1.2, 0.05, 0.2, 100, 0)
    with pytest.raises(ValueError):
        lbcd(disc, 0.1, 0.05, 0.2, 100, 0, mode="hopeful")
    with pytest.raises(ValueError):
        lbcd(disc, 0.1, 0.05, 2.0, 100, 0)


def test_classify_dimension_mismatch(certified_model):
    with pytest.raises(ValueError):
        certified_model.classify([0.2, 0.3])


def test_adaptive_returns_first_success(interval):
    lcd = adaptive_lcd(interval, 0.9, 0.05, 0, m0=16_000, delta0=0.1)
    assert lcd.provenance["trace"].count(";") == 0
    assert lcd.provenance["trace"].endswith("success")


def test_adaptive_succeeds_after_one_halving(interval):
    # C1 at delta0 = 0.24 (p = 0.04); delta0 / 2 = 0.12 has p = 0.52
    lcd = adaptive_lcd(interval, 0.9, 0.05, 0, m0=8000, delta0=0.24)
    steps = lcd.provenance["trace"].split(";")
    assert len(steps) == 2
    assert steps[0].startswith("8000@0.24:c1")
    assert steps[1] == "16000@0.12:success"
    assert lcd.provenance["m"] == 16_000 and lcd.provenance["delta"] == 0.12
    assert lcd.provenance["seed"] == 0 and lcd.provenance["run_seed"] != 0


def test_adaptive_trace_doubles_and_halves(disc):
    with pytest.raises(InfeasibleAtThisScale) as info:
        adaptive_lcd(disc, 0.5, 0.05, 0, m0=1, delta0=1.4, iteration_cap=6)
    trace = info.value.trace
    assert len(trace) >= 3
    for a, b in zip(trace, trace[1:]):
        assert b.m == 2 * a.m and b.delta == a.delta / 2
    assert str(info.value).startswith("infeasible-at-this-scale")


def test_adaptive_iteration_cap(interval):
    with pytest.raises(InfeasibleAtThisScale, match="within 2 iterations"):
        adaptive_lcd(interval, 0.9, 0.05, 0, m0=10, delta0=0.24, iteration_cap=2)


def test_adaptive_stops_at_feature_cap(interval, monkeypatch):
    monkeypatch.setenv(FEATURE_CAP_ENV, "12")
    with pytest.raises(InfeasibleAtThisScale) as info:
        adaptive_lcd(interval, 0.9, 0.05, 0, m0=100, delta0=0.24, max_samples=10**9)
    assert info.value.trace[-1].outcome == "feature-cap"
    assert "cap" in str(info.value)


def test_certified_search_refuses_hopeless_sample_sizes(disc):
    with pytest.raises(InfeasibleAtThisScale) as info:
        adaptive_lcd(disc, 0.1, 0.05, 0, delta0=0.028)
    assert len(info.value.trace) == 1
    assert info.value.trace[0].required_m > 1e9


def test_empirical_adaptive_records_mode(disc):
    lcd = adaptive_lcd(disc, 0.5, 0.5, 1, m0=3000, delta0=0.2, mode=EMPIRICAL)
    assert lcd.mode == EMPIRICAL and lcd.provenance["trace"] == "3000@0.2:success"


def test_feature_cap_env_recorded(interval, monkeypatch):
    monkeypatch.setenv(FEATURE_CAP_ENV, "1000")
    lcd = lbcd(interval, 0.9, 0.05, 0.1, 16_000, 0)
    assert lcd.provenance["feature_cap"] == 1000
    assert lcd.provenance["feature_cap_env"] == "1000"
