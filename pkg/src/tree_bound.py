"""
tree_bound - 测量/细化树：信息评估、合法性检查与两纯态坍缩

每次作用于一个信号 (可利用其他信号的经典边信息) 的协议画成一棵树。测量节点把
自己的 POVM 元素拆成和为它的子元素；细化节点只拆分先验权重。每个节点带有
非归一化先验 p_{x,i} = P(信号 i, 到达节点 x)，协议的信息量是所有测量节点上

    I_x = p_x H(p_{x,.}/p_x) - sum_k p_{y_k} H(p_{y_k,.}/p_{y_k})

的总和。

文本格式 (版本 1)，每行一个节点，每层缩进两个空格：

    # tree-format 1
    # dim <d> states <n>
    <kind> | <element entries, row-major> | <priors>
"""

import math
import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from src.exceptions import DomainError, TreeInvariantError
from src.ensembles import (
    Ensemble, first_protocol_kraus, lift_or_project, lifted_trines, pair_basis_povm, trine_vector, v_basis,
)
from src.info_measures import two_state_accessible_info
from src.linalg_core import entropy_bits, psd_sqrt

logger = logging.getLogger(__name__)

KINDS = ("measurement", "refinement", "leaf")
ELEMENT_TOL = 1e-9
PRIOR_TOL = 1e-12
PSD_FLOOR = -1e-10
FORMAT_VERSION = 1
COLLAPSE_GRID = 721


@dataclass(frozen=True, eq=False)
class TreeNode:
    kind: str
    element: np.ndarray
    priors: np.ndarray
    children: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown node kind {self.kind!r}")
        e = np.array(self.element, dtype=float)
        p = np.array(self.priors, dtype=float).reshape(-1)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise DomainError(f"node element must be square, got {e.shape}")
        if np.any(p < 0.0):
            raise DomainError("node priors must be nonnegative")
        e.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "element", e)
        object.__setattr__(self, "priors", p)
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def mass(self):
        return float(self.priors.sum())

    def walk(self, path="r"):
        """深度优先的 (path, node) 序列，父节点在子节点之前"""
        yield path, self
        for k, child in enumerate(self.children):
            yield from child.walk(f"{path}/{k}")


@dataclass(frozen=True)
class TreeEvaluation:
    total_info: float
    per_node: tuple

    def __post_init__(self):
        total = math.fsum(v for _, v in self.per_node)
        if abs(total - self.total_info) > 1e-12:
            raise DomainError("total_info differs from the sum of node gains")


@dataclass(frozen=True)
class ConcavityReport:
    kappa: float
    grid: int
    min_f: float
    min_f_at: float
    max_second_difference: float
    max_second_difference_at: float
    violations: tuple

    @property
    def passed(self):
        return not self.violations


def weighted_entropy(priors):
    """非归一化权重的 p H(p_i/p)，单位 bit"""
    p = np.asarray(priors, dtype=float)
    return float(entropy_bits(p) - entropy_bits([p.sum()]))


def _signal_weights(element, vectors):
    # Tr(E rho_i) for every pure state
    return np.einsum("ia,ab,ib->i", vectors, element, vectors)


def child_priors(parent_priors, parent_element, child_element, vectors):
    """p_child,i = p_parent,i Tr(E_child rho_i) / Tr(E_parent rho_i)；父节点不会触发处取 0"""
    num = _signal_weights(child_element, vectors)
    den = _signal_weights(parent_element, vectors)
    ratio = np.divide(num, den, out=np.zeros_like(num), where=den > 1e-300)
    return np.asarray(parent_priors, dtype=float) * np.clip(ratio, 0.0, None)


def _fail(path, equality, residual):
    raise TreeInvariantError(path, equality, residual)


def check_node(node, vectors, path="r"):
    """检查单个节点与其直接子节点之间的等式"""
    evals = np.linalg.eigvalsh(0.5 * (node.element + node.element.T))
    if evals.min() < PSD_FLOOR:
        _fail(path, "E >= 0", float(-evals.min()))
    if node.kind == "leaf":
        if node.children:
            _fail(path, "leaf has no children", float(len(node.children)))
        return
    if not node.children:
        _fail(path, f"{node.kind} node has children", 0.0)
    if node.kind == "measurement":
        total = sum(c.element for c in node.children)
        residual = float(np.max(np.abs(total - node.element)))
        if residual > ELEMENT_TOL:
            _fail(path, "sum_j E_child = E_parent", residual)
        for c in node.children:
            expected = child_priors(node.priors, node.element, c.element, vectors)
            residual = float(np.max(np.abs(c.priors - expected)))
            if residual > ELEMENT_TOL:
                _fail(path, "p_child,i = p_parent,i Tr(E_child rho_i)/Tr(E_parent rho_i)", residual)
    else:
        for c in node.children:
            residual = float(np.max(np.abs(c.element - node.element)))
            if residual > ELEMENT_TOL:
                _fail(path, "E_child = E_parent", residual)
        residual = float(np.max(np.abs(sum(c.priors for c in node.children) - node.priors)))
        if residual > PRIOR_TOL:
            _fail(path, "sum_k p_child,i = p_parent,i", residual)


def validate_tree(root, ensemble):
    """检查全部等式，第一处失败即抛出 TreeInvariantError"""
    vectors = ensemble.vectors
    d = ensemble.dim
    if root.element.shape != (d, d):
        _fail("r", "element dimension = ensemble dimension", float(abs(root.element.shape[0] - d)))
    if root.priors.size != len(ensemble):
        _fail("r", "one prior per signal state", float(abs(root.priors.size - len(ensemble))))
    residual = float(np.max(np.abs(root.element - np.eye(d))))
    if residual > ELEMENT_TOL:
        _fail("r", "E_root = I", residual)
    residual = abs(root.mass - 1.0)
    if residual > PRIOR_TOL:
        _fail("r", "sum_i p_root,i = 1", residual)
    for path, node in root.walk():
        check_node(node, vectors, path)


def node_info_gain(node, ensemble, path="r"):
    """单个节点的 I_x；细化节点与叶节点为 0"""
    check_node(node, ensemble.vectors, path)
    if node.kind != "measurement":
        return 0.0
    return weighted_entropy(node.priors) - sum(weighted_entropy(c.priors) for c in node.children)


def evaluate_tree(root, ensemble):
    """校验整棵树，再累加各节点的信息增益"""
    validate_tree(root, ensemble)
    per_node = tuple((path, node_info_gain(node, ensemble, path)) for path, node in root.walk())
    total = math.fsum(v for _, v in per_node)
    return TreeEvaluation(total, per_node)


def _leaf(element, priors):
    return TreeNode("leaf", element, priors)


def measurement_node(element, priors, child_elements, vectors, grandchildren=None):
    """测量节点，子节点 (默认为叶) 的先验按更新规则计算"""
    children = []
    for k, ce in enumerate(child_elements):
        cp = child_priors(priors, element, ce, vectors)
        if grandchildren is not None and grandchildren[k] is not None:
            children.append(grandchildren[k](ce, cp))
        else:
            children.append(_leaf(ce, cp))
    return TreeNode("measurement", element, priors, tuple(children))


def single_measurement_tree(ensemble, povm):
    """根节点直接做秩一 POVM 测量"""
    elements = [r * np.outer(v, v) for r, v in zip(povm.weights, povm.vectors)]
    return measurement_node(np.eye(ensemble.dim), ensemble.priors.weights, elements, ensemble.vectors)


def _pair_refinement(element, priors, vectors, planar):
    """
    把先验拆到三个三重态对 {s+1, s+2} 上，每对用其等先验最优基测量，
    并经 element^(1/2) 拉回。
    """
    b = psd_sqrt(element)
    children = []
    for s in range(3):
        pair = [(s + 1) % 3, (s + 2) % 3]
        share = np.zeros_like(priors)
        share[pair] = 0.5 * priors[pair]
        basis = pair_basis_povm(planar[pair[0]], planar[pair[1]]).vectors
        elements = [b @ np.outer(u, u) @ b for u in basis]
        children.append(measurement_node(element, share, elements, vectors))
    return TreeNode("refinement", element, priors, tuple(children))


def _planar_embedded():
    return [np.append(trine_vector(0.0, b)[:2], 0.0) for b in range(3)]


def adaptive_protocol_tree(alpha, gamma):
    """
    根节点做抬升或投影；抬升分支用 V(0) 读出，投影分支细化为三个三重态对。
    """
    e = lifted_trines(alpha)
    vectors = e.vectors
    a_proj, a_lift = lift_or_project(alpha, gamma).operators
    e_proj, e_lift = a_proj.T @ a_proj, a_lift.T @ a_lift
    lift_elements = [a_lift.T @ np.outer(v, v) @ a_lift for v in v_basis(0.0).vectors]
    planar = _planar_embedded()

    def lifted(element, priors):
        return measurement_node(element, priors, lift_elements, vectors)

    def projected(element, priors):
        return _pair_refinement(element, priors, vectors, planar)

    return measurement_node(np.eye(3), e.priors.weights, [e_proj, e_lift], vectors, [projected, lifted])


def first_protocol_tree(alpha):
    """根节点为四结果 D 测量；平面结果细化为三重态对"""
    e = lifted_trines(alpha)
    vectors = e.vectors
    elements = [a.T @ a for a in first_protocol_kraus(alpha).operators]
    planar = _planar_embedded()

    def projected(element, priors):
        return _pair_refinement(element, priors, vectors, planar)

    return measurement_node(np.eye(3), e.priors.weights, elements, vectors, [None, None, None, projected])


def _require_two_states(ensemble):
    if len(ensemble) != 2:
        raise DomainError(f"two pure states required, got {len(ensemble)}")


def _span_basis(x):
    """x 各行张成空间的正交基 (按行)；维数不超过 1 时返回 None"""
    _, sing, vt = np.linalg.svd(x)
    if sing.size < 2 or sing[1] <= 1e-12 * max(1.0, sing[0]):
        return None
    return vt[:2]


def optimal_two_state_measurement(element, priors, ensemble):
    """
    对两个纯态，给定元素上最优的两结果测量

    记 B = E^(1/2)，x_i = B v_i；子元素为 B u u^T B 与 B (I - u u^T) B，
    u 是 span{x_1, x_2} 中使信息增益最大的单位向量。
    """
    _require_two_states(ensemble)
    element = np.asarray(element, dtype=float)
    priors = np.asarray(priors, dtype=float)
    vectors = ensemble.vectors
    b = psd_sqrt(element)
    x = vectors @ b
    basis = _span_basis(x)
    if basis is None or priors.min() <= 0.0:
        return TreeNode("measurement", element, priors, (_leaf(element, priors),))
    norms2 = np.einsum("ia,ia->i", x, x)
    parent = weighted_entropy(priors)

    def gain(theta):
        u = math.cos(theta) * basis[0] + math.sin(theta) * basis[1]
        frac = (x @ u) ** 2 / norms2
        return parent - weighted_entropy(priors * frac) - weighted_entropy(priors * (1.0 - frac))

    grid = np.linspace(0.0, math.pi, COLLAPSE_GRID, endpoint=False)
    values = np.array([gain(t) for t in grid])
    k = int(np.argmax(values))
    step = grid[1] - grid[0]
    res = minimize_scalar(lambda t: -gain(t), bounds=(grid[k] - step, grid[k] + step), method="bounded",
                          options={"xatol": 1e-12})
    theta = float(res.x) if -res.fun >= values[k] else float(grid[k])
    u = math.cos(theta) * basis[0] + math.sin(theta) * basis[1]
    dim = element.shape[0]
    elements = [b @ np.outer(u, u) @ b, b @ (np.eye(dim) - np.outer(u, u)) @ b]
    return measurement_node(element, priors, elements, vectors)


def two_state_overlap(ensemble):
    _require_two_states(ensemble)
    v = ensemble.vectors
    return float((v[0] @ v[1]) ** 2)


def _has_refinement(node):
    return any(n.kind == "refinement" for _, n in node.walk())


def _deepest_refinement(node, depth=0, path=()):
    best = None
    for k, child in enumerate(node.children):
        found = _deepest_refinement(child, depth + 1, path + (k,))
        if found is not None and (best is None or found[0] > best[0]):
            best = found
    if best is not None:
        return best
    if node.kind == "refinement" and not any(_has_refinement(c) for c in node.children):
        return depth, path
    return None


def _replace_at(node, path, new):
    if not path:
        return new
    children = list(node.children)
    children[path[0]] = _replace_at(children[path[0]], path[1:], new)
    return replace(node, children=tuple(children))


def collapse_deepest_refinement(root, ensemble):
    """
    把最深的细化节点 (其下只有测量节点) 替换为其元素上的最优直接测量；
    对两个纯态，树的信息不会减少。
    """
    _require_two_states(ensemble)
    found = _deepest_refinement(root)
    if found is None:
        raise DomainError("tree has no refinement node to collapse")
    _, path = found
    target = root
    for k in path:
        target = target.children[k]
    collapsed = optimal_two_state_measurement(target.element, target.priors, ensemble)
    logger.debug(f"collapsing refinement at depth {len(path)}")
    return _replace_at(root, path, collapsed)


def scale_tree(node, factor):
    """所有先验乘以 factor 的同构树"""
    return TreeNode(node.kind, node.element, node.priors * factor,
                    tuple(scale_tree(c, factor) for c in node.children))


def proportional_refinement(node, fractions):
    """细化节点，子节点是 node 按给定比例缩放的副本"""
    f = np.asarray(fractions, dtype=float)
    if np.any(f < 0.0) or abs(f.sum() - 1.0) > 1e-12:
        raise DomainError("fractions must be nonnegative and sum to 1")
    children = [scale_tree(node, x) for x in f[:-1]]
    # last share absorbs rounding so priors add up exactly
    rest = node.priors - sum((c.priors for c in children), np.zeros_like(node.priors))
    last = scale_tree(node, f[-1])
    children.append(replace(last, priors=np.clip(rest, 0.0, None)))
    return TreeNode("refinement", node.element, node.priors, tuple(children))


def _inv_sqrt(s):
    evals, evecs = np.linalg.eigh(0.5 * (s + s.T))
    return (evecs / np.sqrt(evals)) @ evecs.T


def _random_split(rng, element, k):
    d = element.shape[0]
    b = psd_sqrt(element)
    gs = []
    for j in range(k):
        rank = d if j == 0 else int(rng.integers(1, d + 1))
        w = rng.normal(size=(d, rank))
        gs.append(w @ w.T)
    root = _inv_sqrt(sum(gs))
    parts = [b @ root @ g @ root @ b for g in gs]
    # symmetrize and let the last part absorb rounding
    parts = [0.5 * (p + p.T) for p in parts[:-1]]
    parts.append(element - sum(parts))
    return parts


def _grow(rng, element, priors, vectors, depth, max_depth, max_branching, kind=None):
    if kind is None:
        if depth >= max_depth:
            kind = "leaf"
        else:
            choices, weights = (KINDS, [0.45, 0.35, 0.2]) if depth else (KINDS[:2], [0.5, 0.5])
            kind = str(rng.choice(choices, p=weights))
    if kind == "leaf":
        return _leaf(element, priors)
    k = int(rng.integers(2, max_branching + 1))
    if kind == "measurement":
        elements = _random_split(rng, element, k)
        children = [
            _grow(rng, ce, child_priors(priors, element, ce, vectors), vectors, depth + 1, max_depth, max_branching)
            for ce in elements]
    else:
        fractions = rng.dirichlet(np.ones(k), size=priors.size)
        shares = [priors * fractions[:, j] for j in range(k - 1)]
        shares.append(np.clip(priors - sum(shares), 0.0, None))
        children = [_grow(rng, element, sh, vectors, depth + 1, max_depth, max_branching) for sh in shares]
    return TreeNode(kind, element, priors, tuple(children))


def random_two_state_tree(rng, ensemble, max_depth=3, max_branching=3):
    """
    两态系综上的随机合法树，至少含一个细化节点

    测量元素是父元素的随机半正定拆分 B S^(-1/2) G_j S^(-1/2) B；
    细化节点按 Dirichlet 比例拆分各先验。
    """
    _require_two_states(ensemble)
    if max_depth < 1 or max_branching < 2:
        raise DomainError("random trees need max_depth >= 1 and max_branching >= 2")
    d = ensemble.dim
    priors = ensemble.priors.weights.copy()
    tree = _grow(rng, np.eye(d), priors, ensemble.vectors, 0, max_depth, max_branching)
    if not _has_refinement(tree):
        tree = _grow(rng, np.eye(d), priors, ensemble.vectors, 0, max_depth, max_branching, kind="refinement")
    return tree


def inequality_f(x):
    """F(x) = 2x/(1-x^2) - ln((1+x)/(1-x))，在 [0, 1) 上非负"""
    x = np.asarray(x, dtype=float)
    return 2.0 * x / (1.0 - x * x) - (np.log1p(x) - np.log1p(-x))


def concavity_audit(kappa, grid):
    """
    检查 F(x) >= 0 (x in [0, 0.999])，并用二阶中心差分检查
    q -> I_acc(kappa, 1/2 + q) 在 (-1/2, 1/2) 开网格上的凹性。
    """
    if not 0.0 <= kappa < 1.0:
        raise DomainError(f"kappa={kappa!r} outside [0,1)")
    if grid < 3:
        raise DomainError(f"grid must have at least 3 points, got {grid}")
    violations = []
    xs = np.linspace(0.0, 0.999, grid)
    f = inequality_f(xs)
    k = int(np.argmin(f))
    for x, v in zip(xs[f < -1e-15], f[f < -1e-15]):
        violations.append(("F(x) >= 0", float(x), float(v)))

    qs = np.linspace(-0.5, 0.5, grid + 2)[1:-1]
    values = np.array([two_state_accessible_info(kappa, 0.5 + q) for q in qs])
    second = values[:-2] - 2.0 * values[1:-1] + values[2:]
    j = int(np.argmax(second))
    for q, v in zip(qs[1:-1][second > 1e-9], second[second > 1e-9]):
        violations.append(("second difference <= 0", float(q), float(v)))
    if violations:
        logger.warning(f"concavity audit at kappa={kappa}: {len(violations)} violations")
    return ConcavityReport(kappa, grid, float(f[k]), float(xs[k]), float(second[j]), float(qs[1:-1][j]),
                           tuple(violations))


def _format_numbers(values):
    return " ".join(format(float(v), ".17g") for v in np.asarray(values).reshape(-1))


def serialize_tree(root):
    """树的带版本号纯文本形式 (格式见模块说明)"""
    d = root.element.shape[0]
    lines = [f"# tree-format {FORMAT_VERSION}", f"# dim {d} states {root.priors.size}"]
    stack = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        lines.append(f"{'  ' * depth}{node.kind} | {_format_numbers(node.element)} | {_format_numbers(node.priors)}")
        stack.extend((c, depth + 1) for c in reversed(node.children))
    return "\n".join(lines) + "\n"


def parse_tree(text):
    """serialize_tree 的逆"""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != f"# tree-format {FORMAT_VERSION}":
        raise DomainError("missing or unsupported tree-format header")
    header = lines[1].split()
    if len(header) != 5 or header[1] != "dim" or header[3] != "states":
        raise DomainError(f"malformed tree header {lines[1]!r}")
    d, n = int(header[2]), int(header[4])

    # (depth, kind, element, priors, children list)
    parsed = []
    for ln in lines[2:]:
        depth, rem = divmod(len(ln) - len(ln.lstrip(" ")), 2)
        if rem:
            raise DomainError(f"bad indentation: {ln!r}")
        parts = [p.strip() for p in ln.strip().split("|")]
        if len(parts) != 3:
            raise DomainError(f"malformed node line {ln!r}")
        element = np.array([float(v) for v in parts[1].split()])
        priors = np.array([float(v) for v in parts[2].split()])
        if element.size != d * d or priors.size != n:
            raise DomainError(f"node line has wrong sizes: {ln!r}")
        parsed.append((depth, parts[0], element.reshape(d, d), priors))

    def build(i, depth):
        node_depth, kind, element, priors = parsed[i]
        if node_depth != depth:
            raise DomainError(f"unexpected depth {node_depth} at line {i + 3}")
        children, j = [], i + 1
        while j < len(parsed) and parsed[j][0] > depth:
            child, j = build(j, depth + 1)
            children.append(child)
        return TreeNode(kind, element, priors, tuple(children)), j

    root, end = build(0, 0)
    if end != len(parsed):
        raise DomainError("trailing nodes after the root")
    return root


def tree_information_bound(root):
    """H(根节点先验)：任何树提取的信息都不超过它"""
    return float(entropy_bits(root.priors))


def two_state_ensemble(kappa, priors):
    """重叠平方为 kappa 的两个实纯态，作为平面系综"""
    if not 0.0 <= kappa <= 1.0:
        raise DomainError(f"kappa={kappa!r} outside [0,1]")
    half = 0.5 * math.acos(math.sqrt(kappa))
    states = ([math.cos(half), math.sin(half)], [math.cos(half), -math.sin(half)])
    return Ensemble(states, priors)
