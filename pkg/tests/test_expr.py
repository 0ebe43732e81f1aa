import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadinv.errors import UsageError
from quadinv.expr import parse


@pytest.mark.parametrize("src, t, value, deriv", [
    ("0.5", 1.3, 0.5, 0.0),
    ("0.5 + 0.1*cos(t)", 1.0, 0.5 + 0.1 * math.cos(1.0), -0.1 * math.sin(1.0)),
    ("0.5*exp(-0.2*t)", 2.0, 0.5 * math.exp(-0.4), -0.1 * math.exp(-0.4)),
    ("sin(3*t)*t", 0.7, math.sin(2.1) * 0.7, 3 * math.cos(2.1) * 0.7 + math.sin(2.1)),
    ("poly(1, 2, 3)", 2.0, 17.0, 14.0),
    ("t**3 - t/4", 1.5, 1.5 ** 3 - 0.375, 3 * 1.5 ** 2 - 0.25),
])
def test_values_and_derivatives(src, t, value, deriv):
    e = parse(src)
    assert e(t) == pytest.approx(value, rel=1e-14, abs=1e-15)
    assert e.deriv()(t) == pytest.approx(deriv, rel=1e-14, abs=1e-15)


def test_numbers_and_arrays():
    assert parse(2)(0.3) == 2.0
    ts = np.linspace(0, 1, 5)
    np.testing.assert_allclose(parse("cos(t)")(ts), np.cos(ts))


@pytest.mark.parametrize("bad", ["x + 1", "cos(t*t)", "exp(t)**2", "t**-1", "1/t", "tan(t)", "cos(", "poly()"])
def test_rejects_outside_grammar(bad):
    with pytest.raises(UsageError):
        parse(bad)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 3))
def test_derivative_matches_difference_quotient(k, c, t):
    e = parse(f"{c}*cos({k}*t) + exp({k}*t)*sin(t) + poly(1, {c}, 0.5)")
    h = 1e-5
    fd = (e(t + h) - e(t - h)) / (2 * h)
    assert e.deriv()(t) == pytest.approx(fd, rel=1e-6, abs=1e-6)
