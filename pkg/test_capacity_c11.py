"""
capacity_c11 单元测试
"""

import os
import sys
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.exceptions import DomainError, SingularChannelError
from src.capacity_c11 import (
    METHODS, C11Point, best_beta_for_priors, c11_best_q_measurement, c11_curve, c11_fixed_measurement,
    channel_parameters, equal_prior_accessible_info, find_gamma1, fixed_beta, gamma1_angle, hull_povm, max_vn_info,
    opt_theta, optimal_third_prior, p0_decay_scan, q_capacity, q_channel, theta_zero_alpha, trine_vn_info,
    two_trine_capacity,
)
from src.ensembles import alpha_prime
from src.info_measures import blahut_arimoto, mutual_information
from src.linalg_core import ProbDist


def test_two_trine_capacity_at_zero():
    assert two_trine_capacity(0.0) == pytest.approx(0.64542, abs=1e-5)
    with pytest.raises(DomainError):
        two_trine_capacity(0.5)


def test_two_trine_slope_at_zero():
    h = 1e-7
    slope = (two_trine_capacity(h) - two_trine_capacity(0.0)) / h
    assert slope == pytest.approx(math.sqrt(3.0) / 2 * math.log2(2.0 + math.sqrt(3.0)), abs=1e-3)


def test_optimal_third_prior_errors():
    with pytest.raises(SingularChannelError):
        optimal_third_prior(0.1, 0.3, 0.3)
    with pytest.raises(DomainError):
        optimal_third_prior(0.8, 0.5, 0.3)
    with pytest.raises(DomainError):
        optimal_third_prior(-0.1, 0.5, 0.0)


@pytest.mark.parametrize("alpha,beta", [(0.03, 2.0 / 3.0), (0.06, 2.0 / 3.0), (0.05, 0.3), (0.1, 0.5)])
def test_closed_form_prior_maximizes_information(alpha, beta):
    t = q_channel(alpha, beta)
    p = optimal_third_prior(*channel_parameters(t))
    grid = np.linspace(0.0, 1.0, 2001)
    values = [mutual_information([x, (1 - x) / 2, (1 - x) / 2], t) for x in grid]
    best = grid[int(np.argmax(values))]
    assert p == pytest.approx(best, abs=1e-3)
    assert mutual_information([p, (1 - p) / 2, (1 - p) / 2], t) >= max(values) - 1e-12


@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.2])
def test_fixed_beta_removes_epsilon(alpha):
    q, delta, epsilon = channel_parameters(q_channel(alpha, fixed_beta(alpha)))
    assert epsilon == pytest.approx(0.0, abs=1e-12)
    assert delta > 0.0


@pytest.mark.parametrize("alpha", [0.01, 0.04, 0.08, 0.15])
def test_guesses_are_ordered(alpha):
    fixed = c11_fixed_measurement(alpha)
    best = c11_best_q_measurement(alpha)
    assert best.value >= fixed.value - 1e-12
    assert best.conjectured == (alpha < 0.018073)


def test_best_q_at_gamma2():
    assert c11_best_q_measurement(0.087247).value == pytest.approx(1.03126, abs=1e-3)


@pytest.mark.parametrize("alpha", [0.045, 0.06, 0.09])
def test_optimal_beta_is_two_thirds(alpha):
    assert c11_best_q_measurement(alpha).beta == pytest.approx(2.0 / 3.0, abs=1e-4)


def test_q_capacity_returns_prior_in_range():
    bits, p0 = q_capacity(0.05, 2.0 / 3.0)
    assert 0.0 <= p0 <= 1.0
    assert 0.0 <= bits <= math.log2(3.0)


def test_c11_point_validation():
    with pytest.raises(DomainError):
        C11Point(0.1, 0.5, 0.2, ProbDist.uniform(3), "magic")
    with pytest.raises(DomainError):
        C11Point(0.1, 2.0, 0.2, ProbDist.uniform(3), "two_trine")


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.0, max_value=0.3), st.floats(min_value=0.0, max_value=2 * math.pi))
def test_trine_vn_info_period_and_bounds(alpha, theta):
    value = trine_vn_info(alpha, theta)
    assert -1e-12 <= value <= math.log2(3.0) + 1e-12
    assert trine_vn_info(alpha, theta + 2 * math.pi / 3) == pytest.approx(value, abs=1e-10)
    assert trine_vn_info(alpha, -theta) == pytest.approx(value, abs=1e-10)


def test_opt_theta_reaches_zero():
    assert theta_zero_alpha() == pytest.approx(0.056651, abs=5e-4)
    assert opt_theta(0.03) > 0.01
    assert opt_theta(0.065) == 0.0


def test_gamma1():
    gamma1 = find_gamma1()
    assert gamma1 == pytest.approx(0.061367, abs=5e-4)
    assert math.sin(gamma1_angle()) ** 2 == pytest.approx(gamma1)


def test_hull_povm_lifts_to_gamma():
    alpha, gamma = 0.03, 0.061367
    povm = hull_povm(alpha, gamma)
    assert len(povm) == 6
    s2 = gamma * (1 - alpha) / (2 * alpha * (1 - gamma) + gamma * (1 - alpha))
    assert alpha_prime(alpha, math.asin(math.sqrt(s2))) == pytest.approx(gamma)
    with pytest.raises(DomainError):
        hull_povm(0.1, 0.05)


def test_equal_prior_information_dominates_von_neumann():
    for alpha in (0.0, 0.02, 0.05, 0.08):
        bits, _ = equal_prior_accessible_info(alpha)
        assert bits >= max_vn_info(alpha) - 1e-9


def test_equal_prior_information_is_continuous_at_gamma1():
    gamma1 = find_gamma1()
    below, _ = equal_prior_accessible_info(gamma1 - 1e-9)
    above, _ = equal_prior_accessible_info(gamma1)
    assert below == pytest.approx(above, abs=1e-6)


def test_six_outcome_gap():
    alpha = 0.024831
    gap = equal_prior_accessible_info(alpha)[0] - max_vn_info(alpha)
    assert gap == pytest.approx(0.0038282, abs=1e-4)


def test_c11_curve_labels_the_best_guess():
    alphas = [0.0, 0.03, 0.1]
    for alpha, point in zip(alphas, c11_curve(alphas)):
        assert point.method in METHODS
        assert point.value >= c11_best_q_measurement(alpha).value - 1e-12
        assert point.value >= equal_prior_accessible_info(alpha)[0] - 1e-12


def test_p0_decay_is_monotone_and_exponential():
    frame = p0_decay_scan([0.04, 0.02, 0.01, 0.005])
    assert list(frame.columns) == ["alpha", "beta", "p0", "log2_p0", "inv_sqrt_alpha"]
    assert np.all(np.diff(frame["p0"]) < 0.0)
    assert np.corrcoef(frame["log2_p0"], frame["inv_sqrt_alpha"])[0, 1] <= -0.99


def test_equal_prior_information_is_linear_below_gamma1():
    gamma1 = find_gamma1()
    start, end = equal_prior_accessible_info(0.0)[0], equal_prior_accessible_info(gamma1 - 1e-12)[0]
    for alpha in np.linspace(0.005, gamma1 - 0.005, 7):
        chord = start + (end - start) * alpha / gamma1
        assert equal_prior_accessible_info(alpha)[0] == pytest.approx(chord, abs=1e-9)


def test_c11_curve_is_not_concave():
    low, mid, high = c11_curve([0.0, 0.04, 0.08])
    assert 0.5 * (low.value + high.value) - mid.value >= 1e-3


@pytest.mark.parametrize("alpha", [0.02, 0.05, 0.1])
def test_best_q_matches_blahut_arimoto(alpha):
    point = c11_best_q_measurement(alpha)
    assert point.value == pytest.approx(blahut_arimoto(q_channel(alpha, point.beta)).capacity, abs=1e-8)


def test_best_beta_for_priors_matches_best_q():
    point = c11_best_q_measurement(0.027)
    assert best_beta_for_priors(0.027, point.priors) == pytest.approx(point.beta, abs=1e-6)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
