import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from certicd import stats


def _normal_upper_tail(z):
    val, _ = integrate.quad(lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi), z, math.inf,
                            epsabs=1e-14, epsrel=1e-13)
    return val


def z_oracle(xi):
    """Invert the numerically integrated upper tail: P(Z > z) = xi / 2."""
    return optimize.brentq(lambda z: _normal_upper_tail(z) - 0.5 * xi, 0.0, 40.0, xtol=1e-14)


def test_z_critical_known_values():
    assert stats.z_critical(0.05) == pytest.approx(1.959964, abs=1e-6)
    assert stats.z_critical(0.3173) == pytest.approx(1.0, abs=1e-4)
    assert 0 < stats.z_critical(0.9999) < 2e-4


def test_z_critical_matches_quadrature_oracle():
    rng = np.random.default_rng(7)
    xis = np.concatenate([rng.uniform(1e-6, 1 - 1e-6, 990), [1e-9, 1e-4, 0.01, 0.5, 0.99, 0.999999,
                                                             0.0485, 0.0486, 0.05, 0.3173]])
    worst = max(abs(stats.z_critical(xi) - z_oracle(xi)) for xi in xis)
    assert worst <= 1e-6


@pytest.mark.parametrize("xi", [0.0, 1.0, -0.1, 2.0])
def test_z_critical_rejects_out_of_range(xi):
    with pytest.raises(ValueError):
        stats.z_critical(xi)


def test_sample_complexity_examples():
    assert stats.sample_complexity_bound(0.5, 0.5, math.sqrt(2) / 2, 2) == pytest.approx(3218.9, abs=0.1)
    # delta = sqrt(d) leaves only the two constants
    expected = 9 ** 2.25 / 4 + 8 * math.log(4)
    assert stats.sample_complexity_bound(1.0, 0.5, 1.0, 1) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(46.16, abs=0.01)


def test_sample_complexity_halving_delta_scales_power_term():
    d, eps, xi, delta = 3, 0.2, 0.1, 0.4
    log_term = 8 * math.log(2 / xi) / eps ** 2
    a = stats.sample_complexity_bound(eps, xi, delta, d) - log_term
    b = stats.sample_complexity_bound(eps, xi, delta / 2, d) - log_term
    assert b / a == pytest.approx(2 ** (9 * d / 4), rel=1e-10)


def test_sample_complexity_overflow_is_infinite():
    assert stats.sample_complexity_bound(0.1, 0.05, 1e-6, 200) == math.inf
    assert stats.required_samples(0.1, 0.05, 1e-6, 200) == math.inf
    assert stats.required_samples(0.0, 0.05, 0.3, 2) == math.inf


@pytest.mark.parametrize("args", [(0.0, 0.1, 0.1, 2), (1.5, 0.1, 0.1, 2), (0.1, 1.0, 0.1, 2),
                                  (0.1, 0.1, 0.0, 2), (0.1, 0.1, 1.5, 2), (0.1, 0.1, 0.1, 0)])
def test_sample_complexity_rejects_bad_params(args):
    with pytest.raises(ValueError):
        stats.sample_complexity_bound(*args)


def test_guarantee_params_are_open_intervals():
    stats.GuaranteeParams(0.1, 0.05, 0.2, 2)
    with pytest.raises(ValueError):
        stats.GuaranteeParams(1.0, 0.05, 0.2, 2)
    with pytest.raises(ValueError):
        stats.GuaranteeParams(0.1, 0.05, math.sqrt(2), 2)


def test_interior_error_examples():
    assert stats.interior_error(0.1, 0.05, 9500, 10000) == pytest.approx(0.04792, abs=5e-6)
    assert stats.interior_error(0.05, 0.05, 9000, 10000) < 0
    assert stats.interior_error(0.3, 0.05, 500, 500) == 0.3
    assert stats.interior_error(0.3, 0.05, 0, 500) == -math.inf


def test_interior_error_rejects_bad_counts():
    with pytest.raises(ValueError):
        stats.interior_error(0.1, 0.05, 11, 10)
    with pytest.raises(ValueError):
        stats.interior_error(0.1, 0.05, 0, 0)


def test_binomial_upper_bound_examples():
    res = stats.binomial_upper_bound(0.5, 100, 0.05)
    assert res.upper == pytest.approx(0.5 + 1.959964 * 0.05, abs=1e-6)
    assert res.normal_approx_valid
    for p in (0.0, 1.0):
        res = stats.binomial_upper_bound(p, 1000, 0.05)
        assert res.upper == p and res.half_width == 0.0 and not res.normal_approx_valid
    h1 = stats.binomial_upper_bound(0.3, 250, 0.1).half_width
    h4 = stats.binomial_upper_bound(0.3, 1000, 0.1).half_width
    assert h1 / h4 == pytest.approx(2.0, rel=1e-14)


def test_validity_rule_threshold():
    assert stats.normal_approx_valid(0.05, 100)
    assert not stats.normal_approx_valid(0.049, 100)
    assert not stats.normal_approx_valid(0.96, 100)


def test_interior_estimate_wraps_functions():
    est = stats.InteriorEstimate(sample_count=10000, interior_count=9500, xi=0.05)
    assert est.p_hat == 0.95
    assert est.z == stats.z_critical(0.05)
    assert est.interior_error(0.1) == stats.interior_error(0.1, 0.05, 9500, 10000)
    assert est.normal_approx_valid


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(0.01, 0.99), xi=st.floats(0.001, 0.5), m=st.integers(2, 10**6), data=st.data())
def test_interior_error_strictly_increasing_in_count(eps, xi, m, data):
    k = data.draw(st.integers(1, m - 1))
    assert stats.interior_error(eps, xi, k, m) < stats.interior_error(eps, xi, k + 1, m)


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(0.01, 1.0), xi=st.floats(0.001, 0.99), d=st.integers(1, 8),
       lo=st.floats(0.01, 0.98), hi=st.floats(0.02, 0.99))
def test_sample_complexity_strictly_decreasing_in_delta(eps, xi, d, lo, hi):
    if hi <= lo:
        lo, hi = hi, lo
    if hi - lo < 1e-6:
        return
    top = math.sqrt(d)
    assert stats.sample_complexity_bound(eps, xi, lo * top, d) > stats.sample_complexity_bound(eps, xi, hi * top, d)


def test_sample_complexity_diverges_as_delta_vanishes():
    values = [stats.sample_complexity_bound(0.1, 0.05, 10.0 ** -k, 2) for k in range(1, 8)]
    assert all(b > a * 100 for a, b in zip(values, values[1:]))


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(0.05, 0.95), xi=st.floats(0.001, 0.5), m=st.integers(100, 10**6), data=st.data())
def test_error_decomposition_closes_at_epsilon(eps, xi, m, data):
    # With p anywhere in the confidence band [p_hat - s, p_hat + s], the worst case
    # interior share times eps_int plus a fully wrong boundary stays within epsilon.
    k = data.draw(st.integers(1, m))
    eps_int = stats.interior_error(eps, xi, k, m)
    if eps_int <= 0:
        return
    p_hat = k / m
    s = stats.binomial_upper_bound(p_hat, m, xi).half_width
    worst = (p_hat + s) * eps_int + (1.0 - (p_hat - s))
    assert worst == pytest.approx(eps, abs=1e-12)
    assert worst <= eps + 1e-12
