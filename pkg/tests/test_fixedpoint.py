import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from dcergm.fixedpoint import find_t, find_t_shifted, logcosh, q_value

# frozen from brentq on x - tanh(2 theta x) over (0.5, 1)
T_THETA_1 = 0.9575040240772688
T_THETA_06 = 0.6585696604057536


def test_t_at_theta_one():
    assert find_t(1.0) == pytest.approx(T_THETA_1, abs=1e-14)
    assert brentq(lambda x: x - math.tanh(2 * x), 0.5, 1, xtol=1e-15) == pytest.approx(T_THETA_1, abs=1e-13)


def test_t_at_theta_06():
    t = find_t(0.6)
    assert t == pytest.approx(T_THETA_06, abs=1e-14)
    assert abs(t - math.tanh(1.2 * t)) < 1e-12


def test_t_saturates():
    assert find_t(20.0) > 0.999


@pytest.mark.parametrize("theta", [0.5, 0.3, 0.0])
def test_t_needs_supercritical_theta(theta):
    with pytest.raises(ValueError):
        find_t(theta)


def test_q_values():
    assert q_value(0.0, 0.7) == 0
    assert q_value(1.0, 0.5) == pytest.approx(0.5 - math.log(math.cosh(1.0)), abs=1e-15)


@given(st.floats(-5, 5), st.floats(0.01, 5))
def test_q_symmetric(x, theta):
    assert q_value(x, theta) == pytest.approx(q_value(-x, theta), abs=1e-12)


@given(st.floats(-700, 700))
def test_logcosh_stable(x):
    ref = np.logaddexp(x, -x) - math.log(2)
    assert logcosh(x) == pytest.approx(ref, abs=1e-12)


@given(st.floats(0.51, 10), st.floats(0, 3))
def test_shifted_root_is_fixed_point_and_minimizer(theta, a):
    t = find_t_shifted(theta, a)
    assert abs(t - math.tanh(2 * theta * t + a)) < 1e-12
    grid = np.linspace(0, 2, 4001)
    assert q_value(t, theta, a) <= q_value(grid, theta, a).min() + 1e-12


@given(st.floats(0.05, 0.5), st.floats(0.01, 3))
def test_shifted_root_exists_below_criticality(theta, a):
    t = find_t_shifted(theta, a)
    assert 0 < t < 1
    assert abs(t - math.tanh(2 * theta * t + a)) < 1e-12


@given(st.floats(0.51, 5), st.floats(0, 1), st.floats(0.01, 1))
def test_shifted_root_increasing_in_a(theta, a, da):
    assert find_t_shifted(theta, a + da) >= find_t_shifted(theta, a)
