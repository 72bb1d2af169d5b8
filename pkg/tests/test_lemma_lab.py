import numpy as np
import pytest

from graphopt.errors import DomainError
from graphopt.lemma_lab import (CoefficientPath, check_coupled_inequality,
                                check_scalar_inequality, envelope7, envelope8,
                                integrate_scalar_equality)

C = CoefficientPath.constant


def test_coefficient_path_kinds():
    assert C(2.0)(5.0) == 2.0
    assert CoefficientPath.power_law(1.0, 0.5)(3.0) == pytest.approx(0.5)
    assert CoefficientPath.exp_decay(1.0, 1.0)(1.0) == pytest.approx(np.exp(-1))
    pw = CoefficientPath("piecewise_linear", times=(0.0, 1.0, 2.0),
                         values=(0.0, 2.0, 2.0))
    assert pw(0.5) == 1.0
    assert pw(5.0) == 2.0


def test_coefficient_path_validation():
    with pytest.raises(DomainError):
        CoefficientPath("nope")
    with pytest.raises(DomainError):
        C(-1.0)
    with pytest.raises(DomainError):
        C(0.0, positive=True)


def test_linear_decay():
    times, ys = integrate_scalar_equality(C(1.0), C(0.0), C(0.0), 4.0, 20.0,
                                          0.01)
    np.testing.assert_allclose(ys, 4.0 * np.exp(-times), atol=1e-8)


def test_sqrt_fixed_point():
    # -y + 2 sqrt(y) = 0 at y = 4
    _, ys = integrate_scalar_equality(C(1.0), C(2.0), C(0.0), 4.0, 20.0, 0.01)
    np.testing.assert_allclose(ys, 4.0, atol=1e-10)


def test_forced_saturation():
    times, ys = integrate_scalar_equality(C(1.0), C(0.0), C(3.0), 0.0, 20.0,
                                          0.01)
    np.testing.assert_allclose(ys, 3.0 * (1.0 - np.exp(-times)), atol=1e-7)


def test_integrator_fourth_order():
    def terminal(h):
        _, ys = integrate_scalar_equality(C(1.0), C(1.0), C(0.5), 2.0, 5.0, h)
        return ys[-1]

    e1 = abs(terminal(0.1) - terminal(0.0125))
    e2 = abs(terminal(0.05) - terminal(0.0125))
    # halving h should cut the error by roughly 2^4
    assert e1 / max(e2, 1e-16) > 8.0


def test_envelope8_arithmetic():
    assert envelope8(C(1.0), C(0.0), C(0.0), 4.0, 10.0) == pytest.approx(4.0)
    assert envelope8(C(1.0), C(2.0), C(0.0), 0.0, 10.0) == pytest.approx(4.0)
    assert envelope8(C(1.0), C(0.0), C(3.0), 0.0, 10.0) == pytest.approx(3.0)


def test_envelope7_diagnostic():
    assert envelope7(C(1.0), C(2.0), C(0.0), 0.0) == pytest.approx(4.0)


def test_scalar_inequality_analytic_cases():
    cases = [
        (C(1.0), C(0.0), C(0.0), 4.0),
        (C(1.0), C(2.0), C(0.0), 4.0),
        (C(1.0), C(0.0), C(3.0), 0.0),
    ]
    for a1, a2, a3, y0 in cases:
        res = check_scalar_inequality(a1, a2, a3, y0, 20.0, 0.01)
        assert res["holds"]


def test_scalar_inequality_random_sweep():
    rng = np.random.default_rng(8)
    for _ in range(30):
        a1 = C(rng.uniform(0.1, 10.0))
        a2 = C(rng.uniform(0.0, 10.0))
        a3 = C(rng.uniform(0.0, 10.0))
        y0 = rng.uniform(0.0, 100.0)
        res = check_scalar_inequality(a1, a2, a3, y0, 20.0, 0.02)
        assert res["holds"], (a1.a, a2.a, a3.a, y0)


def test_comparison_slack_property():
    # shrinking the forcing can only lower the equality solution
    rng = np.random.default_rng(9)
    for _ in range(10):
        a1 = C(rng.uniform(0.5, 3.0))
        a3 = C(rng.uniform(0.5, 3.0))
        slack = rng.uniform(0.0, a3.a)
        _, y_full = integrate_scalar_equality(a1, C(1.0), a3, 2.0, 10.0, 0.01)
        _, y_slack = integrate_scalar_equality(a1, C(1.0), C(a3.a - slack),
                                               2.0, 10.0, 0.01)
        assert np.all(y_slack <= y_full + 1e-10)


def test_negative_initial_value_rejected():
    with pytest.raises(DomainError):
        integrate_scalar_equality(C(1.0), C(0.0), C(0.0), -1.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        integrate_scalar_equality(C(0.0), C(0.0), C(0.0), 1.0, 1.0, 0.1)


def test_coupled_decays_exponential_forcing():
    e = CoefficientPath.exp_decay(1.0, 1.0)
    res = check_coupled_inequality(C(1.0), e, e, e, C(1.0), C(1.0), e,
                                   1.0, 1.0, 50.0, 0.01)
    assert not res["rejected"]
    assert res["decayed"]


def test_coupled_degenerate_decoupled():
    zero = C(0.0)
    e = CoefficientPath.exp_decay(1.0, 1.0)
    res = check_coupled_inequality(C(1.0), e, zero, zero, C(1.0), C(1.0),
                                   zero, 1.0, 0.0, 50.0, 0.01)
    assert not res["rejected"]
    assert res["y2_final"] == 0.0
    assert res["y1_final"] < 1e-10


def test_hypothesis_rejection_convergent_a1():
    a1 = CoefficientPath.power_law(1.0, 1.5)  # integrable
    e = CoefficientPath.exp_decay(1.0, 1.0)
    res = check_coupled_inequality(a1, e, e, e, C(1.0), C(1.0), e,
                                   1.0, 1.0, 10.0, 0.1)
    assert res["rejected"]
    assert "int a1 = inf" in res["violations"]


def test_hypothesis_rejection_ratio():
    # a2 decays no faster than a1: ratio does not vanish
    a1 = CoefficientPath.power_law(1.0, 0.3)
    a2 = CoefficientPath.power_law(1.0, 0.3)
    e = CoefficientPath.exp_decay(1.0, 1.0)
    res = check_coupled_inequality(a1, a2, e, e, C(1.0), C(1.0), e,
                                   1.0, 1.0, 10.0, 0.1)
    assert res["rejected"]
    assert "a2/a1 -> 0" in res["violations"]


def test_hypothesis_rejection_y3():
    e = CoefficientPath.exp_decay(1.0, 1.0)
    res = check_coupled_inequality(C(1.0), e, e, e, C(1.0), C(1.0), C(0.5),
                                   1.0, 1.0, 10.0, 0.1)
    assert res["rejected"]
    assert "Y3 -> 0" in res["violations"]
