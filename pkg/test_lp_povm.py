"""
lp_povm 单元测试：候选网格、线性规划、对偶正弦证书与单纯形扫描
"""

import os
import sys
import math

import numpy as np
import pandas as pd
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.exceptions import DimensionMismatchError, DomainError
from src.capacity_c11 import best_beta_for_priors, find_gamma1, hull_povm, max_vn_info
from src.ensembles import lifted_trines, planar_trines, q_measurement, triple_povm, v_basis
from src.info_measures import induced_channel, mutual_information
from src.linalg_core import ProbDist, binary_entropy
from src.lp_povm import (
    SCAN_COLUMNS, CandidateSet, dual_certificate, find_local_maxima, find_third_tangency_prior, grid_spacing,
    line_local_maxima, max_accessible_info, planar_grid, projector_information, refine_candidates,
    refined_accessible_info, shoulder_position, simplex_lattice, simplex_scan, sphere_grid, symmetric_priors,
    third_tangency_gap,
)

TWO_TRINE = 1.0 - binary_entropy(0.5 - math.sqrt(3.0) / 4.0)
UNIFORM_PLANAR = math.log2(3.0) - 1.0


def test_planar_grid_shape():
    c = planar_grid(12)
    assert len(c) == 12 and c.dim == 2
    np.testing.assert_allclose(np.linalg.norm(c.vectors, axis=1), 1.0)
    with pytest.raises(DomainError):
        planar_grid(3)


def test_sphere_grid_is_upper_hemisphere():
    c = sphere_grid(500)
    assert c.vectors.shape == (500, 3)
    np.testing.assert_allclose(np.linalg.norm(c.vectors, axis=1), 1.0)
    assert np.all(c.vectors[:, 2] > 0.0)


def test_projector_information_of_orthogonal_direction():
    e = planar_trines()
    # orthogonal to T_0: only T_1 and T_2 can fire
    assert projector_information(e.priors, e, [0.0, 1.0]) > 0.0
    assert projector_information([1.0, 0.0, 0.0], e, [1.0, 0.0]) == pytest.approx(0.0, abs=1e-15)


def test_uniform_planar_lp_value():
    e = planar_trines()
    solution = max_accessible_info(e, e.priors, planar_grid(360))
    assert solution.status == "optimal"
    assert solution.value == pytest.approx(UNIFORM_PLANAR, abs=1e-9)
    assert solution.support_size <= 3


def test_two_trine_lp_value():
    e = planar_trines()
    solution = max_accessible_info(e, ProbDist([0.0, 0.5, 0.5]), planar_grid(360))
    assert solution.value == pytest.approx(TWO_TRINE, abs=1e-9)


def test_sphere_lp_is_a_valid_lower_bound():
    alpha = 0.05
    e = lifted_trines(alpha)
    solution = max_accessible_info(e, e.priors, sphere_grid(3000))
    assert solution.status == "optimal"
    assert solution.support_size <= 6
    assert max_vn_info(alpha) - 0.03 <= solution.value <= math.log2(3.0)
    vectors = solution.support_vectors()
    weights = np.array([w for _, w in solution.weights])
    np.testing.assert_allclose(np.einsum("j,ja,jb->ab", weights, vectors, vectors), np.eye(3), atol=1e-7)


def test_refinement_never_lowers_the_value():
    e = planar_trines()
    priors = ProbDist([0.2, 0.4, 0.4])
    coarse = max_accessible_info(e, priors, planar_grid(90))
    refined = max_accessible_info(e, priors, refine_candidates(coarse, planar_grid(90)))
    assert refined.value >= coarse.value - 1e-12


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        max_accessible_info(lifted_trines(0.1), ProbDist.uniform(3), planar_grid(36))


def test_dual_certificate_for_two_trines():
    cert = dual_certificate(ProbDist([0.0, 0.5, 0.5]), planar_trines(), n=360, verify_n=4000)
    assert cert.certified
    assert len(cert.tangencies) == 2
    np.testing.assert_allclose(sorted(cert.tangencies), [math.pi / 4, 3 * math.pi / 4], atol=1e-3)
    assert 2.0 * cert.offset == pytest.approx(cert.lp_value, abs=1e-6)
    assert cert.third_gap > 0.0
    theta = np.linspace(0.0, math.pi, 50)
    assert np.all(cert(theta) >= -1e-12)


def test_simplex_lattice_size():
    assert len(simplex_lattice(6)) == 28
    assert all(sum(point) == 6 for point in simplex_lattice(6))


def test_planar_simplex_scan():
    frame = simplex_scan(0.0, 6, planar_grid(180))
    assert list(frame.columns) == SCAN_COLUMNS
    assert len(frame) == 28
    assert (frame["status"] == "optimal").all()
    assert frame["access_info"].max() == pytest.approx(TWO_TRINE, abs=1e-9)
    corner = frame[(frame["p0"] == 1.0)]
    assert corner["access_info"].iloc[0] == pytest.approx(0.0, abs=1e-12)


def test_planar_scan_rejects_lifted_alpha():
    with pytest.raises(DimensionMismatchError):
        simplex_scan(0.01, 6, planar_grid(36))


def _synthetic_frame(denominator, value):
    rows = []
    for a, b, c in simplex_lattice(denominator):
        p = np.array([a, b, c]) / denominator
        rows.append((0.0, *p, value(p), 3, "optimal"))
    return pd.DataFrame(rows, columns=SCAN_COLUMNS)


def test_local_maxima_single_peak():
    frame = _synthetic_frame(6, lambda p: -float(np.sum((p - 1.0 / 3.0) ** 2)))
    maxima = find_local_maxima(frame, 6)
    assert len(maxima) == 1
    assert maxima.iloc[0]["p0"] == pytest.approx(1.0 / 3.0)


def test_local_maxima_plateau_counts_once():
    frame = _synthetic_frame(6, lambda p: 1.0 if p[0] == 0.0 and round(p[1] * 6) in (3, 4) else 0.0)
    maxima = find_local_maxima(frame, 6)
    top = maxima[maxima["access_info"] == 1.0]
    assert len(top) == 1
    assert int(top.iloc[0]["size"]) == 2


def test_sphere_grid_nearest_neighbour_gap():
    for n in (1000, 10000):
        v = sphere_grid(n).vectors
        worst = 0.0
        for start in range(0, n, 1000):
            block = np.abs(v[start:start + 1000] @ v.T)
            block[np.arange(block.shape[0]), np.arange(start, start + block.shape[0])] = -1.0
            nearest = np.arccos(np.clip(block.max(axis=1), -1.0, 1.0))
            worst = max(worst, float(nearest.max()))
        assert worst <= 2.0 * math.sqrt(2.0 * math.pi / n)


def test_grid_spacing():
    assert grid_spacing(planar_grid(360)) == pytest.approx(math.pi / 360)
    assert grid_spacing(sphere_grid(20000)) == pytest.approx(math.sqrt(2.0 * math.pi / 20000))


@pytest.mark.parametrize("seed", range(6))
def test_lp_beats_triple_povm_constructions(seed):
    rng = np.random.default_rng(seed)
    alpha = float(rng.uniform(0.01, 0.06))
    e = lifted_trines(alpha)
    priors = ProbDist(rng.dirichlet([1.0, 1.0, 1.0]))
    s2 = float(rng.uniform(0.4, 0.95))
    weight = 1.0 / (3.0 * s2)
    povms = [
        v_basis(float(rng.uniform(0.0, math.pi))),
        triple_povm([(weight, math.asin(math.sqrt(s2)), 0.0), (1.0 - weight, 0.0, math.pi / 6)]),
        hull_povm(alpha, 0.061367),
    ]
    for povm in povms:
        c = CandidateSet.from_vectors(np.vstack([sphere_grid(1000).vectors, povm.vectors]), 1000)
        solution = max_accessible_info(e, priors, c)
        assert solution.value >= mutual_information(priors, induced_channel(e, povm)) - 1e-9


@pytest.mark.parametrize("p0", [0.0, 0.02, 0.1, 1.0 / 3.0, 0.6])
def test_weak_duality(p0):
    e = planar_trines()
    priors = ProbDist([p0, 0.5 * (1.0 - p0), 0.5 * (1.0 - p0)])
    cert = dual_certificate(priors, e, n=360, verify_n=4000)
    assert cert.lp_value <= 2.0 * cert.offset + 1e-6
    # any POVM on a finer grid stays under the sine, up to its off-grid violation
    finer = max_accessible_info(e, priors, planar_grid(2000)).value
    assert finer <= 2.0 * (cert.offset + cert.max_violation) + 1e-6


def test_lp_support_follows_hull_povm():
    alpha = 0.03
    e = lifted_trines(alpha)
    c = sphere_grid(20000)
    solution = max_accessible_info(e, e.priors, c)
    assert solution.support_size <= 6
    hull = hull_povm(alpha, find_gamma1()).vectors
    # lines, so v and -v are the same direction
    angles = np.arccos(np.clip(np.abs(solution.support_vectors() @ hull.T), 0.0, 1.0))
    assert angles.min(axis=1).max() <= 3.0 * grid_spacing(c)


def test_third_tangency_prior():
    assert third_tangency_gap(0.03) > 0.0
    assert third_tangency_gap(0.1) < 0.0
    assert find_third_tangency_prior() == pytest.approx(0.065, abs=2e-3)


def test_line_local_maxima_skips_end_points():
    p0 = np.linspace(0.0, 0.3, 31)
    values = np.sin(12.0 * p0) - p0
    frame = pd.DataFrame({"alpha": 0.0, "p0": p0, "p1": 0.5 * (1 - p0), "p2": 0.5 * (1 - p0),
                          "access_info": values, "support_size": 3, "status": "optimal"}, columns=SCAN_COLUMNS)
    maxima = line_local_maxima(frame)
    assert len(maxima) == 1
    assert maxima.iloc[0]["p0"] == pytest.approx(0.12)


def test_refined_lp_is_at_least_the_plain_lp():
    alpha = 0.027
    e = lifted_trines(alpha)
    priors = symmetric_priors(0.1)
    c = sphere_grid(1000)
    plain = max_accessible_info(e, priors, c)
    refined = refined_accessible_info(e, priors, c, passes=2)
    assert refined.value >= plain.value - 1e-12


def test_shoulder_on_the_symmetric_line():
    alpha = 0.027

    def q_vectors(priors):
        return q_measurement(best_beta_for_priors(alpha, priors)).vectors

    p0, frame = shoulder_position(alpha, sphere_grid(4000), 0.09, 0.13, 0.005, q_vectors)
    assert len(frame) == 9
    assert (frame["status"] == "optimal").all()
    assert p0 == pytest.approx(0.105, abs=1e-2)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
