"""
info_measures 单元测试
"""

import os
import sys
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.exceptions import DimensionMismatchError, DomainError
from src.ensembles import lifted_trines, planar_trines, q_measurement, v_basis
from src.info_measures import (
    CANONICAL_DIRECTION, TransitionMatrix, blahut_arimoto, holevo_capacity, holevo_chi, induced_channel,
    mutual_information, prior_derivative, projector_derivative, two_state_accessible_info,
)
from src.linalg_core import ProbDist, StateVector, binary_entropy
from src.lp_povm import projector_information


def test_transition_matrix_rows_must_sum_to_one():
    with pytest.raises(DomainError):
        TransitionMatrix([[0.5, 0.4]])
    t = TransitionMatrix([[1.0, 0.0, 0.0], [0.0, 0.5, 0.5]])
    assert (t.n_in, t.n_out) == (2, 3)


@given(st.floats(min_value=0.0, max_value=1.0 / 3.0), st.floats(min_value=-1.0, max_value=1.0))
def test_induced_channel_is_stochastic(alpha, theta):
    t = induced_channel(lifted_trines(alpha), v_basis(theta))
    np.testing.assert_allclose(t.rows.sum(axis=1), 1.0, atol=1e-12)


def test_induced_channel_dimension_check():
    with pytest.raises(DimensionMismatchError):
        induced_channel(planar_trines(), v_basis(0.0))


def test_mutual_information_of_noiseless_channel():
    assert mutual_information(ProbDist.uniform(3), TransitionMatrix(np.eye(3))) == pytest.approx(math.log2(3))
    assert mutual_information([1.0, 0.0, 0.0], np.eye(3)) == pytest.approx(0.0)


@pytest.mark.parametrize("e", [0.0, 0.05, 0.11, 0.3])
def test_blahut_arimoto_binary_symmetric(e):
    result = blahut_arimoto(TransitionMatrix([[1 - e, e], [e, 1 - e]]))
    assert result.capacity == pytest.approx(1.0 - binary_entropy(e), abs=1e-9)
    np.testing.assert_allclose(result.optimal_priors.weights, [0.5, 0.5], atol=1e-4)


def test_blahut_arimoto_erasure_channel():
    erase = 0.3
    result = blahut_arimoto(TransitionMatrix([[1 - erase, 0.0, erase], [0.0, 1 - erase, erase]]))
    assert result.capacity == pytest.approx(1.0 - erase, abs=1e-9)


@settings(max_examples=40)
@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
def test_two_state_accessible_info_bounds(kappa, p):
    value = two_state_accessible_info(kappa, p)
    assert -1e-12 <= value <= binary_entropy(p) + 1e-12


def test_two_state_accessible_info_limits():
    assert two_state_accessible_info(0.0, 0.3) == pytest.approx(binary_entropy(0.3))
    assert two_state_accessible_info(1.0, 0.3) == pytest.approx(0.0, abs=1e-12)
    # equal priors: 1 - H(1/2 + sqrt(1 - kappa)/2)
    assert two_state_accessible_info(0.25, 0.5) == pytest.approx(1.0 - binary_entropy(0.5 + math.sqrt(0.75) / 2))


def test_holevo_capacity_endpoints():
    assert holevo_capacity(0.0) == pytest.approx(1.0)
    assert holevo_capacity(1.0 / 3.0) == pytest.approx(math.log2(3))
    assert holevo_chi(planar_trines()) == pytest.approx(1.0)


def test_holevo_bounds_measured_information():
    for alpha in (0.01, 0.05, 0.2):
        e = lifted_trines(alpha)
        measured = mutual_information(e.priors, induced_channel(e, v_basis(0.3)))
        assert measured <= holevo_capacity(alpha) + 1e-12


@pytest.mark.parametrize("alpha,theta", [(0.02, 0.3), (0.05, 0.0), (0.1, 0.7)])
def test_prior_derivative_matches_finite_difference(alpha, theta):
    e = lifted_trines(alpha)
    m = v_basis(theta)
    d = np.array(CANONICAL_DIRECTION)
    h = 1e-6

    def info(step):
        p = ProbDist(e.priors.weights + step * d)
        return mutual_information(p, induced_channel(e, m))

    numeric = (info(h) - info(-h)) / (2 * h)
    assert prior_derivative(e, m, d) == pytest.approx(numeric, abs=1e-6)


def test_projector_derivatives_sum_to_prior_derivative():
    e = lifted_trines(0.04)
    m = v_basis(0.2)
    total = sum(r * projector_derivative(e.priors, e, v, CANONICAL_DIRECTION) for r, v in m.elements)
    assert total == pytest.approx(prior_derivative(e, m, CANONICAL_DIRECTION), abs=1e-12)


def test_direction_must_sum_to_zero():
    e = lifted_trines(0.04)
    with pytest.raises(DomainError):
        prior_derivative(e, v_basis(0.0), [1.0, 0.0, 0.0])


def test_merging_outcomes_never_adds_information():
    rng = np.random.default_rng(5)
    for _ in range(100):
        rows = rng.dirichlet(np.ones(4), size=3)
        priors = rng.dirichlet(np.ones(3))
        merged = np.column_stack([rows[:, 0], rows[:, 1], rows[:, 2] + rows[:, 3]])
        assert mutual_information(priors, merged) <= mutual_information(priors, rows) + 1e-12


def test_merging_povm_outcomes_never_adds_information():
    rng = np.random.default_rng(6)
    for _ in range(100):
        e = lifted_trines(float(rng.uniform(0.0, 0.3))).with_priors(rng.dirichlet(np.ones(3)))
        rows = induced_channel(e, v_basis(float(rng.uniform(0.0, math.pi)))).rows
        i, j = rng.choice(3, size=2, replace=False)
        k = 3 - i - j
        merged = np.column_stack([rows[:, i] + rows[:, j], rows[:, k]])
        assert mutual_information(e.priors, merged) <= mutual_information(e.priors, rows) + 1e-12


def test_blahut_arimoto_dominates_random_priors():
    t = induced_channel(lifted_trines(0.05), q_measurement(0.6))
    capacity = blahut_arimoto(t).capacity
    rng = np.random.default_rng(7)
    for _ in range(100):
        assert mutual_information(rng.dirichlet(np.ones(3)), t) <= capacity + 1e-9


def test_holevo_bound_on_random_trine_configurations():
    rng = np.random.default_rng(8)
    for k in range(100):
        e = lifted_trines(float(rng.uniform(0.0, 1.0))).with_priors(rng.dirichlet(np.ones(3)))
        m = v_basis(float(rng.uniform(0.0, math.pi))) if k % 2 else q_measurement(float(rng.uniform(0.0, 1.0)))
        assert mutual_information(e.priors, induced_channel(e, m)) <= holevo_chi(e) + 1e-10


def _random_configuration(seed):
    rng = np.random.default_rng(seed)
    alpha = float(rng.uniform(0.01, 0.3))
    priors = 0.05 + 0.85 * rng.dirichlet(np.ones(3))
    direction = rng.normal(size=3)
    direction -= direction.mean()
    direction /= np.abs(direction).max()
    return lifted_trines(alpha).with_priors(priors), direction, rng


@pytest.mark.parametrize("seed", range(50))
def test_prior_derivative_finite_difference(seed):
    e, direction, rng = _random_configuration(seed)
    m = v_basis(float(rng.uniform(0.0, math.pi))) if seed % 2 else q_measurement(float(rng.uniform(0.05, 0.95)))
    t = induced_channel(e, m)
    h = 1e-5
    numeric = (mutual_information(e.priors.weights + h * direction, t)
               - mutual_information(e.priors.weights - h * direction, t)) / (2 * h)
    assert abs(prior_derivative(e, m, direction) - numeric) <= 1e-6


@pytest.mark.parametrize("seed", range(50))
def test_projector_derivative_finite_difference(seed):
    e, direction, rng = _random_configuration(seed)
    v = StateVector.normalized(rng.normal(size=3))
    h = 1e-5
    numeric = (projector_information(e.priors.weights + h * direction, e, v)
               - projector_information(e.priors.weights - h * direction, e, v)) / (2 * h)
    # I'_v leaves out -(sum_i p'_i q_i)/ln 2, which cancels over a complete POVM
    flow = float(direction @ (e.vectors @ v.coords) ** 2)
    assert abs(projector_derivative(e.priors, e, v, direction) - flow / math.log(2.0) - numeric) <= 1e-6


def test_projector_derivative_values():
    e = planar_trines().with_priors([0.0, 0.5, 0.5])
    diagonal = [math.cos(math.pi / 4), math.sin(math.pi / 4)]
    assert projector_derivative(e.priors, e, diagonal, CANONICAL_DIRECTION) == pytest.approx(-0.3227, abs=1e-3)
    assert projector_derivative(e.priors, e, [1.0, 0.0], CANONICAL_DIRECTION) == pytest.approx(2.0, abs=1e-9)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
