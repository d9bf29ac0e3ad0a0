import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import hyp2f1

from hetcov.special_math import (
    QuadratureError,
    QuadratureSpec,
    c_delta,
    c_delta_integral_oracle,
    exp_sinh_rule,
    expect_exp1,
    integrate_semi_infinite,
)

DELTAS = [0.1, 2 / 3.5, 0.5, 2 / 3, 0.95]


@pytest.mark.parametrize("delta", DELTAS)
def test_c_delta_matches_hyp2f1(delta):
    x = np.concatenate([[0.0], np.geomspace(1e-6, 1e8, 200)])
    ref = hyp2f1(1.0, 1.0 - delta, 2.0 - delta, -x)
    np.testing.assert_allclose(c_delta(x, delta), ref, rtol=1e-12, atol=0)


@pytest.mark.parametrize("delta", DELTAS)
@pytest.mark.parametrize("x", [0.0, 1e-3, 0.7, 2.0, 2.0001, 35.0, 1e5])
def test_c_delta_matches_euler_integral(x, delta):
    assert c_delta(x, delta) == pytest.approx(c_delta_integral_oracle(x, delta), rel=1e-7)


def test_c_delta_closed_form_at_half():
    # 2F1(1, 1/2; 3/2; -x) = arctan(sqrt x) / sqrt x
    x = np.geomspace(1e-4, 1e6, 50)
    np.testing.assert_allclose(c_delta(x, 0.5), np.arctan(np.sqrt(x)) / np.sqrt(x), rtol=1e-13)


def test_c_delta_scalar_and_continuity_at_switch():
    assert isinstance(c_delta(1.0, 0.5), float)
    lo, hi = c_delta(np.nextafter(2.0, 0), 0.3), c_delta(np.nextafter(2.0, 3), 0.3)
    assert abs(lo - hi) < 1e-13


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5])
def test_c_delta_rejects_delta(bad):
    with pytest.raises(ValueError):
        c_delta(1.0, bad)


def test_c_delta_rejects_negative_argument():
    with pytest.raises(ValueError):
        c_delta(np.array([1.0, -1e-9]), 0.5)
    with pytest.raises(ValueError):
        c_delta(np.nan, 0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.02, 0.98), st.floats(0, 1e6), st.floats(0, 1e6))
def test_c_delta_decreasing_and_bounded(delta, x1, x2):
    a, b = sorted([x1, x2])
    ca, cb = c_delta(a, delta), c_delta(b, delta)
    assert 0 < cb <= ca + 1e-15 <= 1 + 1e-15


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(10, 1e7))
def test_c_delta_large_x_asymptote(delta, x):
    lead = (1 - delta) * math.pi / math.sin(math.pi * delta) * x ** (delta - 1)
    # next term is -(1-delta)/(delta x)
    assert abs(c_delta(x, delta) - lead) <= (1 - delta) / (delta * x) * 1.01


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(rel_tol=0)
    with pytest.raises(ValueError):
        QuadratureSpec(max_subdivisions=3)


@pytest.mark.parametrize("n", range(6))
def test_exp_sinh_moments(n):
    assert expect_exp1(lambda v: v**n) == pytest.approx(math.factorial(n), rel=1e-10)


def test_exp_sinh_rule_is_readonly_and_cached():
    x, w = exp_sinh_rule(5)
    assert exp_sinh_rule(5)[0] is x
    with pytest.raises(ValueError):
        x[0] = 1.0


@pytest.mark.parametrize(
    "f, ref",
    [
        (lambda x: np.exp(-x), 1.0),
        (lambda x: 1 / (1 + x) ** 2, 1.0),
        (lambda x: x ** -0.5 * np.exp(-x), math.sqrt(math.pi)),
        (lambda x: 1 / (1 + x * x), math.pi / 2),
    ],
)
def test_integrate_semi_infinite(f, ref):
    assert integrate_semi_infinite(f) == pytest.approx(ref, rel=1e-8)


def test_integrate_semi_infinite_against_quad():
    f = lambda x: x**0.3 * np.exp(-2 * x**0.8)
    ref = integrate.quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-12)[0]
    assert integrate_semi_infinite(f) == pytest.approx(ref, rel=1e-8)


def test_integrate_semi_infinite_raises_on_non_finite():
    with pytest.raises(QuadratureError):
        integrate_semi_infinite(lambda x: np.full_like(x, np.nan))
