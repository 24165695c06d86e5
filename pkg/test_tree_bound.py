"""
tree_bound 单元测试：树的合法性、信息评估、协议树与两纯态坍缩
"""

import os
import sys
import math

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.exceptions import DomainError, TreeInvariantError
from src.capacity_adaptive import GAMMA2, best_protocol_rate, simple_protocol_rate
from src.ensembles import lifted_trines, pair_basis_povm, v_basis
from src.info_measures import induced_channel, mutual_information, two_state_accessible_info
from src.tree_bound import (
    TreeNode, adaptive_protocol_tree, collapse_deepest_refinement, concavity_audit, evaluate_tree, first_protocol_tree,
    inequality_f, measurement_node, node_info_gain, optimal_two_state_measurement, parse_tree, proportional_refinement,
    random_two_state_tree, serialize_tree, single_measurement_tree, tree_information_bound,
    two_state_ensemble, two_state_overlap, validate_tree, weighted_entropy,
)


def test_weighted_entropy_is_homogeneous():
    p = np.array([0.2, 0.3])
    assert weighted_entropy(2.0 * p) == pytest.approx(2.0 * weighted_entropy(p))
    assert weighted_entropy([0.5, 0.5]) == pytest.approx(1.0)


def test_single_measurement_tree_matches_mutual_information():
    e = lifted_trines(0.05)
    povm = v_basis(0.2)
    result = evaluate_tree(single_measurement_tree(e, povm), e)
    assert result.total_info == pytest.approx(mutual_information(e.priors, induced_channel(e, povm)), abs=1e-10)
    assert result.total_info <= tree_information_bound(single_measurement_tree(e, povm)) + 1e-12


@pytest.mark.parametrize("alpha", [0.02, 0.05])
def test_adaptive_tree_equals_protocol_rate(alpha):
    e = lifted_trines(alpha)
    result = evaluate_tree(adaptive_protocol_tree(alpha, GAMMA2), e)
    assert result.total_info == pytest.approx(best_protocol_rate(alpha).total, abs=1e-6)
    refinements = [path for path, node in adaptive_protocol_tree(alpha, GAMMA2).walk() if node.kind == "refinement"]
    assert refinements == ["r/0"]


@pytest.mark.parametrize("alpha", [0.0, 0.05, 0.2])
def test_first_protocol_tree_equals_simple_rate(alpha):
    e = lifted_trines(alpha)
    result = evaluate_tree(first_protocol_tree(alpha), e)
    assert result.total_info == pytest.approx(simple_protocol_rate(alpha).total, abs=1e-6)


def test_node_info_gains_add_up():
    alpha = 0.05
    e = lifted_trines(alpha)
    tree = first_protocol_tree(alpha)
    result = evaluate_tree(tree, e)
    gains = {path: node_info_gain(node, e, path) for path, node in tree.walk()}
    assert math.fsum(gains.values()) == pytest.approx(result.total_info, abs=1e-12)
    assert all(gains[path] == 0.0 for path, node in tree.walk() if node.kind != "measurement")


def test_invalid_node_kind():
    with pytest.raises(DomainError):
        TreeNode("split", np.eye(2), [0.5, 0.5])


def test_children_must_sum_to_parent():
    e = two_state_ensemble(0.3, [0.5, 0.5])
    bad = TreeNode("measurement", np.eye(2), e.priors.weights, (
        TreeNode("leaf", 0.5 * np.eye(2), 0.5 * e.priors.weights),
        TreeNode("leaf", 0.4 * np.eye(2), 0.4 * e.priors.weights),
    ))
    with pytest.raises(TreeInvariantError) as info:
        validate_tree(bad, e)
    assert info.value.path == "r"
    assert "E_child" in info.value.equality


def test_refinement_priors_must_add_up():
    e = two_state_ensemble(0.3, [0.5, 0.5])
    bad = TreeNode("refinement", np.eye(2), [0.5, 0.5], (
        TreeNode("leaf", np.eye(2), [0.2, 0.2]),
        TreeNode("leaf", np.eye(2), [0.2, 0.2]),
    ))
    with pytest.raises(TreeInvariantError) as info:
        evaluate_tree(bad, e)
    assert info.value.equality == "sum_k p_child,i = p_parent,i"


def test_root_must_be_identity():
    e = two_state_ensemble(0.3, [0.5, 0.5])
    with pytest.raises(TreeInvariantError):
        validate_tree(TreeNode("leaf", 0.5 * np.eye(2), [0.5, 0.5]), e)


@pytest.mark.parametrize("kappa,p", [(0.1, 0.5), (0.4, 0.3), (0.8, 0.7)])
def test_optimal_two_state_measurement_reaches_accessible_info(kappa, p):
    e = two_state_ensemble(kappa, [p, 1 - p])
    assert two_state_overlap(e) == pytest.approx(kappa)
    node = optimal_two_state_measurement(np.eye(2), e.priors.weights, e)
    info = evaluate_tree(node, e).total_info
    assert info == pytest.approx(two_state_accessible_info(kappa, p), abs=1e-9)


def test_proportional_refinement_keeps_information():
    e = two_state_ensemble(0.3, [0.4, 0.6])
    basis = pair_basis_povm(*e.vectors)
    tree = single_measurement_tree(e, basis)
    refined = proportional_refinement(tree, [0.25, 0.75])
    assert evaluate_tree(refined, e).total_info == pytest.approx(evaluate_tree(tree, e).total_info, abs=1e-12)


@pytest.mark.parametrize("seed", range(25))
def test_collapse_never_loses_information(seed):
    rng = np.random.default_rng(seed)
    e = two_state_ensemble(float(rng.uniform(0.05, 0.95)), rng.dirichlet([1.0, 1.0]))
    tree = random_two_state_tree(rng, e)
    info = evaluate_tree(tree, e).total_info
    assert info <= tree_information_bound(tree) + 1e-12
    while any(node.kind == "refinement" for _, node in tree.walk()):
        tree = collapse_deepest_refinement(tree, e)
        collapsed = evaluate_tree(tree, e).total_info
        assert collapsed >= info - 1e-9
        info = collapsed


def test_collapse_needs_a_refinement():
    e = two_state_ensemble(0.3, [0.5, 0.5])
    tree = measurement_node(np.eye(2), e.priors.weights, [0.5 * np.eye(2), 0.5 * np.eye(2)], e.vectors)
    with pytest.raises(DomainError):
        collapse_deepest_refinement(tree, e)


def test_random_trees_need_two_states():
    with pytest.raises(DomainError):
        random_two_state_tree(np.random.default_rng(0), lifted_trines(0.1))


def test_inequality_f():
    assert inequality_f(0.0) == pytest.approx(0.0)
    xs = np.linspace(0.0, 0.999, 1000)
    assert np.all(inequality_f(xs) >= -1e-15)


@pytest.mark.parametrize("kappa", [0.1, 0.25, 0.5, 0.9])
def test_concavity_audit_passes(kappa):
    report = concavity_audit(kappa, 2000)
    assert report.passed
    assert report.min_f >= -1e-15
    assert report.max_second_difference <= 1e-9


def test_tree_text_format():
    alpha = 0.05
    e = lifted_trines(alpha)
    tree = first_protocol_tree(alpha)
    text = serialize_tree(tree)
    assert text.startswith("# tree-format 1\n# dim 3 states 3\n")
    parsed = parse_tree(text)
    assert evaluate_tree(parsed, e).total_info == pytest.approx(evaluate_tree(tree, e).total_info, abs=1e-12)
    with pytest.raises(DomainError):
        parse_tree("# tree-format 2\n")


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
