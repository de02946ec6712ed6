"""Closed-form statistics behind the learned collision detector.

Contents:

* ``z_critical`` -- two-sided standard-normal critical value.
* ``sample_complexity_bound`` -- Hard-SVM sample complexity over the
  clearance interior, as a function of (epsilon, xi, delta, d).
* ``interior_error`` -- the tolerable error inside the interior given an
  empirical interior proportion.
* ``binomial_upper_bound`` -- Wald-type upper confidence bound on a proportion.

All of these are evaluated in float64; the power term of the sample
complexity is taken in the log domain so it saturates to ``inf`` rather than
raising ``OverflowError``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

# ln(9**(9/4) / 4)
_LOG_COMPLEXITY_CONST = 2.25 * math.log(9.0) - math.log(4.0)
_LOG_FLOAT_MAX = math.log(1.7976931348623157e308)

# Acklam's rational approximation to the inverse normal CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _norm_ppf_lower(q):
    """Inverse standard-normal CDF for ``0 < q <= 0.5``.

    Acklam's approximation (relative error ~1e-9) followed by one Halley
    step against ``erfc``, which brings the result to full double precision.
    """
    if q < _P_LOW:
        r = math.sqrt(-2.0 * math.log(q))
        x = ((((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5])
             / ((((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0))
    else:
        r = q - 0.5
        s = r * r
        x = ((((((_A[0] * s + _A[1]) * s + _A[2]) * s + _A[3]) * s + _A[4]) * s + _A[5]) * r
             / (((((_B[0] * s + _B[1]) * s + _B[2]) * s + _B[3]) * s + _B[4]) * s + 1.0))
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - q
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def z_critical(xi):
    """Return ``z_{xi/2}``, the upper ``xi/2`` quantile of N(0, 1).

    >>> round(z_critical(0.05), 6)
    1.959964
    """
    xi = float(xi)
    if not 0.0 < xi < 1.0:
        raise ValueError(f"xi must lie in (0, 1), got {xi!r}")
    return -_norm_ppf_lower(0.5 * xi)


def _check_open_unit(name, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value!r}")


@dataclass(frozen=True)
class GuaranteeParams:
    epsilon: float
    xi: float
    delta: float
    d: int

    def __post_init__(self):
        _check_open_unit("epsilon", self.epsilon)
        _check_open_unit("xi", self.xi)
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d!r}")
        if not 0.0 < self.delta < math.sqrt(self.d):
            raise ValueError(f"delta must lie in (0, sqrt(d)), got {self.delta!r}")

    def sample_complexity(self):
        return sample_complexity_bound(self.epsilon, self.xi, self.delta, self.d)


def sample_complexity_bound(epsilon, xi, delta, d):
    """Number of delta-interior samples sufficient for Hard-SVM error <= epsilon.

    Evaluates ``(1/eps^2) * [9^(9/4)/4 * (sqrt(d)/delta)^(9d/4) + 8 ln(2/xi)]``.
    Returns ``math.inf`` when the value does not fit in a float64; callers
    treat that as "infeasible" and round finite values up themselves.
    """
    epsilon, xi, delta = float(epsilon), float(xi), float(delta)
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    _check_open_unit("xi", xi)
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d!r}")
    # delta = sqrt(d) is the closed end of the formula's domain (n = 1).
    if not 0.0 < delta <= math.sqrt(d):
        raise ValueError(f"delta must lie in (0, sqrt(d)], got {delta!r}")

    log_margin_term = _LOG_COMPLEXITY_CONST + 2.25 * d * math.log(math.sqrt(d) / delta)
    log_eps2 = 2.0 * math.log(epsilon)
    if log_margin_term - log_eps2 >= _LOG_FLOAT_MAX:
        return math.inf
    total = math.exp(log_margin_term) + 8.0 * math.log(2.0 / xi)
    value = total / (epsilon * epsilon)
    return value if math.isfinite(value) else math.inf


def required_samples(epsilon, xi, delta, d):
    """``sample_complexity_bound`` rounded up; ``math.inf`` when infeasible."""
    if epsilon <= 0.0:
        return math.inf
    bound = sample_complexity_bound(min(epsilon, 1.0), xi, delta, d)
    return math.inf if math.isinf(bound) else math.ceil(bound)


def interior_error(epsilon, xi, interior_count, sample_count):
    """Tolerable 0-1 loss inside the delta-interior.

    With ``p = interior_count / sample_count`` and ``s = z * sqrt(p(1-p)/|S|)``
    this is ``(epsilon - (1 - p) - s) / (p + s)``. A non-positive value means
    the requested overall error cannot be certified at this clearance.
    ``p = 0`` makes the denominator vanish; ``-inf`` is returned so the caller
    sees an unambiguous failure.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if not 0 <= interior_count <= sample_count:
        raise ValueError("interior_count must lie in [0, sample_count]")
    if interior_count == 0:
        return -math.inf
    p_hat = interior_count / sample_count
    slack = z_critical(xi) * math.sqrt(p_hat * (1.0 - p_hat) / sample_count)
    return (epsilon - (1.0 - p_hat) - slack) / (p_hat + slack)


class ProportionBound(NamedTuple):
    upper: float
    half_width: float
    normal_approx_valid: bool


def normal_approx_valid(p_hat, m):
    # The rule of thumb is stated for the true p; p_hat stands in for it.
    return m * min(p_hat, 1.0 - p_hat) >= 5.0


def binomial_upper_bound(p_hat, m, xi):
    """Upper confidence bound ``p_hat + z_{xi/2} sqrt(p_hat (1 - p_hat) / m)``."""
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"p_hat must lie in [0, 1], got {p_hat!r}")
    if m < 1:
        raise ValueError("m must be >= 1")
    half = z_critical(xi) * math.sqrt(p_hat * (1.0 - p_hat) / m)
    return ProportionBound(p_hat + half, half, normal_approx_valid(p_hat, m))


@dataclass(frozen=True)
class InteriorEstimate:
    sample_count: int
    interior_count: int
    xi: float

    @property
    def p_hat(self):
        return self.interior_count / self.sample_count

    @property
    def z(self):
        return z_critical(self.xi)

    @property
    def normal_approx_valid(self):
        return normal_approx_valid(self.p_hat, self.sample_count)

    def interior_error(self, epsilon):
        return interior_error(epsilon, self.xi, self.interior_count, self.sample_count)
