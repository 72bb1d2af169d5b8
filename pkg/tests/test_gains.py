import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphopt.errors import DomainError
from graphopt.gains import (PowerLawGain, SgdGains, TrackingGains,
                            validate_general, validate_sgd, validate_tracking)


def test_eval_examples():
    g = PowerLawGain(1.0, 0.75)
    assert g(0.0) == 1.0
    assert g(15.0) == pytest.approx(0.125)
    assert PowerLawGain(2.0, 0.0)(123.0) == 2.0


def test_invalid_parameters():
    with pytest.raises(DomainError):
        PowerLawGain(0.0, 0.5)
    with pytest.raises(DomainError):
        PowerLawGain(1.0, -0.1)
    with pytest.raises(DomainError):
        PowerLawGain(1.0, 0.5)(-1.0)


@given(st.floats(0.1, 3.0), st.floats(0.0, 2.0),
       st.floats(0.0, 50.0), st.floats(0.1, 50.0))
def test_integral_matches_quadrature(a, g, t0, dt):
    gain = PowerLawGain(a, g)
    t1 = t0 + dt
    grid = np.linspace(t0, t1, 20001)
    approx = np.trapezoid(gain(grid), grid)
    assert gain.integral(t0, t1) == pytest.approx(approx, rel=1e-5, abs=1e-7)


def test_integral_log_case():
    gain = PowerLawGain(2.0, 1.0)
    assert gain.integral(0.0, np.e - 1.0) == pytest.approx(2.0)


def test_derivative_matches_finite_difference():
    gain = PowerLawGain(1.5, 0.6)
    for t in [0.0, 1.0, 10.0, 100.0]:
        fd = (gain(t + 1e-6) - gain(max(t - 1e-6, 0.0))) / (
            2e-6 if t > 0 else 1e-6)
        assert gain.derivative(t) == pytest.approx(fd, rel=1e-5)


def test_defaults_pass():
    assert validate_sgd(SgdGains.default()).ok
    assert validate_tracking(TrackingGains.default()).ok
    c = (PowerLawGain(1.0, 0.3),) + tuple(PowerLawGain(1.0, 0.8)
                                          for _ in range(4))
    assert validate_general(c).ok


def test_sgd_violation_square_integrability():
    gains = SgdGains(PowerLawGain(1.0, 0.25), PowerLawGain(1.0, 0.4))
    res = validate_sgd(gains)
    assert res.violations == ("∫α₂² < ∞",)


def test_sgd_violation_ratio():
    gains = SgdGains(PowerLawGain(1.0, 0.8), PowerLawGain(1.0, 0.75))
    res = validate_sgd(gains)
    assert res.violations == ("α₂/α₁ → 0",)


def test_tracking_violation_product_integral():
    gains = TrackingGains(PowerLawGain(1.0, 0.6), PowerLawGain(1.0, 0.6),
                          PowerLawGain(1.0, 0.2))
    res = validate_tracking(gains)
    assert res.violations == ("∫β₁β₂ = ∞",)


def test_tracking_violation_ratio():
    gains = TrackingGains(PowerLawGain(1.0, 0.1), PowerLawGain(1.0, 0.4),
                          PowerLawGain(1.0, 0.2))
    res = validate_tracking(gains)
    assert res.violations == ("β₁/β₃ → 0",)


def test_general_violation_c1_limit():
    c = (PowerLawGain(1.0, 0.0),) + tuple(PowerLawGain(1.0, 0.8)
                                          for _ in range(4))
    res = validate_general(c)
    assert res.violations == ("lim c₁(t) = 0",)


def test_general_violation_c5_square():
    c = (PowerLawGain(1.0, 0.25), PowerLawGain(1.0, 0.75),
         PowerLawGain(1.0, 0.75), PowerLawGain(1.0, 0.75),
         PowerLawGain(1.0, 0.4))
    res = validate_general(c)
    assert res.violations == ("∫c₅² < ∞",)


def test_accepted_schedule_numeric_sanity():
    # numeric shadow of the symbolic p-series tests
    a2 = SgdGains.default().alpha2
    assert a2.integral(0.0, 1e6) > 5.0 * a2.integral(0.0, 1e3)
    sq = PowerLawGain(a2.scale**2, 2.0 * a2.exponent)
    assert abs(sq.integral(0.0, 1e6) - sq.integral(0.0, 1e4)) < (
        0.01 * sq.integral(0.0, 1e4))


def test_accepted_ratio_decay():
    g = SgdGains.default()
    ratio = lambda t: g.alpha2(t) / g.alpha1(t)
    assert ratio(1e6) < 0.01 * ratio(1.0)


def test_beta2_prime():
    g = TrackingGains.default()
    assert g.beta2_prime(0.0) == pytest.approx(-0.4)
    assert g.beta2_prime(15.0) == pytest.approx(-0.4 * 16.0**-1.4)
