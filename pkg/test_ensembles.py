"""
ensembles 单元测试：三重态、POVM 构造与 Kraus 测量
"""

import os
import sys
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.exceptions import ConstraintViolationError, DomainError
from src.linalg_core import SymMatrix, sym_eigenvalues
from src.ensembles import (
    PHI_VN, alpha_prime, apply_kraus, discrimination_vectors, first_protocol_kraus, lift_or_project,
    lifted_trines, p_prime, pair_basis_povm, partial_measurement, planar_trines, q_measurement,
    trine_vector, triple_povm, v_basis,
)

Q0 = 0.5 - math.sqrt(3.0) / 4.0


@pytest.mark.parametrize("alpha", [0.0, 0.05, 1.0 / 3.0, 0.8])
def test_lifted_trine_inner_products(alpha):
    v = lifted_trines(alpha).vectors
    for i in range(3):
        assert v[i] @ v[i] == pytest.approx(1.0)
        for j in range(i + 1, 3):
            assert v[i] @ v[j] == pytest.approx((3.0 * alpha - 1.0) / 2.0)


@pytest.mark.parametrize("alpha", [0.05, 0.2, 0.5, 0.9])
def test_trine_frame_smallest_eigenvalue(alpha):
    frame = SymMatrix.from_projectors(np.ones(3), lifted_trines(alpha).vectors)
    smallest = sym_eigenvalues(frame)[0]
    assert smallest == pytest.approx(min(3.0 * alpha, 1.5 * (1.0 - alpha)), abs=1e-6)


def test_lifted_trines_rejects_bad_alpha():
    with pytest.raises(DomainError):
        lifted_trines(1.2)


def test_planar_trines_are_two_dimensional():
    e = planar_trines()
    assert e.dim == 2 and len(e) == 3
    np.testing.assert_allclose(e.density_matrix(), np.eye(2) / 2, atol=1e-15)


@given(st.floats(min_value=-math.pi, max_value=math.pi, allow_nan=False))
def test_v_basis_is_orthonormal(theta):
    v = v_basis(theta).vectors
    np.testing.assert_allclose(v @ v.T, np.eye(3), atol=1e-12)


def test_q_two_thirds_is_v_zero():
    np.testing.assert_allclose(q_measurement(2.0 / 3.0).vectors, v_basis(0.0).vectors, atol=1e-12)


def test_triple_povm_constraint_names():
    with pytest.raises(ConstraintViolationError) as info:
        triple_povm([(1.0, 0.0, 0.0)])
    assert info.value.condition == "sin2_phi"
    with pytest.raises(ConstraintViolationError) as info:
        triple_povm([(0.5, PHI_VN, 0.0)])
    assert info.value.condition == "sum_p"


def test_six_outcome_povm_is_complete():
    s2 = 0.5
    weight = 1.0 / (3.0 * s2)
    povm = triple_povm([(weight, math.asin(math.sqrt(s2)), 0.0), (1.0 - weight, 0.0, math.pi / 6)])
    assert len(povm) == 6


def test_partial_measurement_kraus_and_lift():
    phi = math.asin(math.sqrt(0.5))
    kraus = partial_measurement([(2.0 / 3.0, phi), (1.0 / 3.0, 0.0)])
    alpha = 0.04
    outcomes = apply_kraus(kraus, trine_vector(alpha, 1))
    assert sum(p for p, _ in outcomes) == pytest.approx(1.0)
    assert outcomes[0][0] == pytest.approx(p_prime(alpha, 2.0 / 3.0, phi))
    post = outcomes[0][1].coords
    assert post[2] ** 2 == pytest.approx(alpha_prime(alpha, phi))


@given(st.floats(min_value=0.0, max_value=0.3), st.floats(min_value=0.31, max_value=0.9))
def test_lift_or_project_outcomes(alpha, gamma):
    kraus = lift_or_project(alpha, gamma)
    for b in range(3):
        (p_proj, projected), (p_lift, lifted) = apply_kraus(kraus, trine_vector(alpha, b))
        assert p_lift == pytest.approx(alpha / gamma, abs=1e-12)
        assert p_proj + p_lift == pytest.approx(1.0, abs=1e-12)
        if lifted is not None:
            np.testing.assert_allclose(lifted.coords, trine_vector(gamma, b), atol=1e-9)
        if projected is not None:
            np.testing.assert_allclose(projected.coords, trine_vector(0.0, b), atol=1e-9)


def test_lift_or_project_needs_alpha_below_gamma():
    with pytest.raises(DomainError):
        lift_or_project(0.2, 0.1)


@pytest.mark.parametrize("alpha", [0.01, 0.1, 0.3])
def test_discrimination_vectors_exclude_other_trines(alpha):
    d = discrimination_vectors(alpha)
    for b in range(3):
        for c in range(3):
            if c != b:
                assert d[b].coords @ trine_vector(alpha, c) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.05, 1.0 / 3.0])
def test_first_protocol_identifies_with_probability_three_alpha(alpha):
    kraus = first_protocol_kraus(alpha)
    assert len(kraus) == 4
    for b in range(3):
        probs = [p for p, _ in apply_kraus(kraus, trine_vector(alpha, b))]
        assert probs[b] == pytest.approx(3.0 * alpha, abs=1e-12)
        assert probs[3] == pytest.approx(1.0 - 3.0 * alpha, abs=1e-12)


def test_pair_basis_error_is_two_state_crossover():
    t = planar_trines().vectors
    basis = pair_basis_povm(t[1], t[2]).vectors
    assert (basis[1] @ t[1]) ** 2 == pytest.approx(Q0)
    assert (basis[0] @ t[1]) ** 2 == pytest.approx(1.0 - Q0)


def test_pair_basis_completes_in_three_dimensions():
    u, w = trine_vector(0.0, 1), trine_vector(0.0, 2)
    povm = pair_basis_povm(u, w)
    assert povm.dim == 3 and len(povm) == 3


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
