"""Route-choice dynamics: exponential-weights updates and rate schedules."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parallelroads import LearningSchedule, hedge_update, learning_rate, uniform_routing
from parallelroads.choice import validate_routing


def test_two_road_reference_update():
    # Latency gap 2 at rate 0.5 shifts the even split to the logistic point.
    out = hedge_update([0.5, 0.5], [2.0, 4.0], 0.5)
    expected = 1.0 / (1.0 + math.exp(-1.0))
    assert out[0] == pytest.approx(expected, abs=1e-15)
    assert out[1] == pytest.approx(1.0 - expected, abs=1e-15)


def test_zero_rate_is_identity():
    start = np.array([0.3, 0.7])
    np.testing.assert_array_equal(hedge_update(start, [5.0, 1.0], 0.0), start)


@given(st.floats(-100.0, 100.0))
def test_latency_shift_invariance(shift):
    """Only latency differences matter, never the absolute level."""
    base = hedge_update([0.2, 0.8], [3.0, 7.0], 0.25)
    shifted = hedge_update([0.2, 0.8], [3.0 + shift, 7.0 + shift], 0.25)
    np.testing.assert_allclose(shifted, base, atol=1e-12)


@given(
    st.lists(st.one_of(st.just(0.0), st.floats(1e-9, 1.0)), min_size=2, max_size=5),
    st.lists(st.floats(0.0, 50.0), min_size=2, max_size=5),
    st.floats(0.0, 2.0),
)
def test_update_stays_on_simplex_and_preserves_support(weights, latencies, rate):
    # Support preservation holds for any weight that hasn't underflowed to
    # the denormal floor, hence the gap between 0 and 1e-9 in the strategy.
    n = min(len(weights), len(latencies))
    weights, latencies = np.array(weights[:n]), np.array(latencies[:n])
    if weights.sum() == 0.0:
        weights[0] = 1.0
    weights = weights / weights.sum()
    out = hedge_update(weights, latencies, rate)
    assert out.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(out >= 0.0)
    for before, after in zip(weights, out):
        assert (before == 0.0) == (after == 0.0)


def test_lower_latency_gains_weight():
    out = hedge_update([0.5, 0.5], [1.0, 9.0], 0.1)
    assert out[0] > 0.5 > out[1]


def test_update_input_validation():
    with pytest.raises(ValueError):
        hedge_update([0.5, 0.5], [1.0], 0.1)
    with pytest.raises(ValueError):
        hedge_update([0.5, 0.5], [1.0, float("nan")], 0.1)
    with pytest.raises(ValueError):
        hedge_update([0.5, 0.5], [1.0, 2.0], -0.1)
    with pytest.raises(ValueError):
        hedge_update([0.0, 0.0], [1.0, 2.0], 0.1)


def test_uniform_routing():
    np.testing.assert_allclose(uniform_routing(4), [0.25] * 4)
    with pytest.raises(ValueError):
        uniform_routing(0)


class TestSchedules:
    def test_constant(self):
        sched = LearningSchedule("constant", 0.1)
        assert learning_rate(sched, 0) == 0.1
        assert learning_rate(sched, 999) == 0.1

    def test_inverse_sqrt_decays(self):
        sched = LearningSchedule("inverse_sqrt", 0.5)
        assert learning_rate(sched, 0) == 0.5
        assert learning_rate(sched, 3) == pytest.approx(0.25)
        assert learning_rate(sched, 99) == pytest.approx(0.05)

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            learning_rate(LearningSchedule(), -1)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            LearningSchedule("linear", 0.1)
        with pytest.raises(ValueError):
            LearningSchedule("constant", 0.0)


class TestValidateRouting:
    def test_renormalizes_within_tolerance(self):
        out = validate_routing(np.array([0.5, 0.5 + 5e-10]), 2)
        assert out.sum() == 1.0

    def test_rejects_off_simplex(self):
        with pytest.raises(ValueError):
            validate_routing(np.array([0.6, 0.6]), 2, tol=1e-6)
        with pytest.raises(ValueError):
            validate_routing(np.array([-0.1, 1.1]), 2, tol=1e-6)
        with pytest.raises(ValueError):
            validate_routing(np.array([1.0]), 2)
