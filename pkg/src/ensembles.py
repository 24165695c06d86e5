"""
ensembles - 三重态系综与测量族的构造

抬升三重态、由 P_b(phi, theta) 组成的三元 POVM、部分测量 M(phi)、Q(beta) 基，
以及自适应协议使用的 Kraus 算符组。每个构造函数都会校验它应满足的完备性条件。
"""

import math
import logging
from dataclasses import dataclass

import numpy as np

from src.exceptions import ConstraintViolationError, DimensionMismatchError, DomainError
from src.linalg_core import ProbDist, StateVector

logger = logging.getLogger(__name__)

COMPLETENESS_TOL = 1e-9
TWO_PI_3 = 2.0 * math.pi / 3.0
# sin^2(phi) = 1/3 makes M(phi) the identity
PHI_VN = math.asin(1.0 / math.sqrt(3.0))


@dataclass(frozen=True, eq=False)
class Ensemble:
    """带先验的同维纯态系综"""
    states: tuple
    priors: ProbDist

    def __post_init__(self):
        states = tuple(s if isinstance(s, StateVector) else StateVector(s) for s in self.states)
        if not states:
            raise DomainError("ensemble needs at least one state")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise DimensionMismatchError(f"ensemble states have mixed dimensions {sorted(dims)}")
        priors = self.priors if isinstance(self.priors, ProbDist) else ProbDist(self.priors)
        if len(priors) != len(states):
            raise DimensionMismatchError(f"{len(states)} states but {len(priors)} priors")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", priors)

    @property
    def dim(self):
        return self.states[0].dim

    @property
    def vectors(self):
        return np.array([s.coords for s in self.states])

    def __len__(self):
        return len(self.states)

    def with_priors(self, priors):
        return Ensemble(self.states, priors)

    def density_matrix(self):
        v = self.vectors
        return np.einsum("i,ia,ib->ab", self.priors.weights, v, v)


@dataclass(frozen=True, eq=False)
class Povm:
    """秩一投影的加权和 r_j v_j v_j^T，总和为单位阵"""
    weights: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[0] != w.size or v.shape[1] not in (2, 3):
            raise DimensionMismatchError(f"povm weights {w.shape} do not match vectors {v.shape}")
        if np.any(w < 0.0):
            raise ConstraintViolationError("povm weight is negative", condition="nonnegative")
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise DomainError("povm vectors must be unit vectors")
        residual = np.max(np.abs(np.einsum("j,ja,jb->ab", w, v, v) - np.eye(v.shape[1])))
        if residual > COMPLETENESS_TOL:
            raise ConstraintViolationError(
                f"povm completeness residual {residual:.3e} exceeds {COMPLETENESS_TOL}",
                condition="completeness")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_elements(cls, elements):
        """由 (权重, StateVector 或坐标) 序列构造"""
        weights = [float(r) for r, _ in elements]
        vectors = [v.coords if isinstance(v, StateVector) else np.asarray(v, dtype=float) for _, v in elements]
        return cls(np.array(weights), np.array(vectors))

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.weights.size

    @property
    def elements(self):
        return [(float(r), StateVector(v)) for r, v in zip(self.weights, self.vectors)]


@dataclass(frozen=True, eq=False)
class KrausSet:
    """实 Kraus 算符 A_i，满足 sum_i A_i^T A_i = I"""
    operators: np.ndarray

    def __post_init__(self):
        ops = np.array(self.operators, dtype=float)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionMismatchError(f"kraus operators must be square, got {ops.shape}")
        total = np.einsum("kba,kbc->ac", ops, ops)
        residual = np.max(np.abs(total - np.eye(ops.shape[1])))
        if residual > COMPLETENESS_TOL:
            raise ConstraintViolationError(
                f"kraus completeness residual {residual:.3e} exceeds {COMPLETENESS_TOL}",
                condition="completeness")
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    @property
    def dim(self):
        return self.operators.shape[1]

    def __len__(self):
        return self.operators.shape[0]


def trine_vector(alpha, b):
    """T_b(alpha) 的坐标数组"""
    planar = math.sqrt(1.0 - alpha)
    angle = TWO_PI_3 * b
    return np.array([planar * math.cos(angle), planar * math.sin(angle), math.sqrt(alpha)])


def lifted_trines(alpha, priors=None):
    """
    三个抬升三重态 T_0, T_1, T_2

    Args:
        alpha: 抬离平面的分量平方，取值 [0, 1]
        priors: 可选先验，默认均匀
    Returns:
        3 维 Ensemble，两两内积为 (3*alpha - 1)/2
    """
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha={alpha!r} outside [0,1]")
    states = tuple(StateVector(trine_vector(alpha, b)) for b in range(3))
    return Ensemble(states, ProbDist.uniform(3) if priors is None else priors)


def planar_trines(priors=None):
    """未抬升的平面三重态 (2 维系综)"""
    states = tuple(StateVector([math.cos(TWO_PI_3 * b), math.sin(TWO_PI_3 * b)]) for b in range(3))
    return Ensemble(states, ProbDist.uniform(3) if priors is None else priors)


def p_vector(phi, theta, b):
    """P_b(phi, theta) = (cos phi cos(theta + 2 pi b/3), cos phi sin(theta + 2 pi b/3), sin phi)."""
    angle = theta + TWO_PI_3 * b
    return np.array([math.cos(phi) * math.cos(angle), math.cos(phi) * math.sin(angle), math.sin(phi)])


def v_vector(theta, b):
    """V_b(theta)：对称 von Neumann 测量的基向量"""
    angle = theta + TWO_PI_3 * b
    return np.array([math.sqrt(2.0 / 3.0) * math.cos(angle), math.sqrt(2.0 / 3.0) * math.sin(angle),
                     1.0 / math.sqrt(3.0)])


def m_matrix(phi):
    """M(phi) = diag(sqrt(3/2) cos phi, sqrt(3/2) cos phi, sqrt(3) sin phi)."""
    c = math.sqrt(1.5) * math.cos(phi)
    return np.diag([c, c, math.sqrt(3.0) * math.sin(phi)])


def _check_triple_constraints(ps, phis):
    total = float(np.sum(ps))
    if abs(total - 1.0) > COMPLETENESS_TOL:
        raise ConstraintViolationError(f"component weights sum to {total!r}, not 1", condition="sum_p")
    lifted = float(np.sum(ps * np.sin(phis) ** 2))
    if abs(lifted - 1.0 / 3.0) > COMPLETENESS_TOL:
        raise ConstraintViolationError(
            f"sum p_i sin^2(phi_i) = {lifted!r}, not 1/3", condition="sin2_phi")
    if np.any(ps < 0.0):
        raise ConstraintViolationError("component weight is negative", condition="sum_p")


def triple_povm(components):
    """
    由 sqrt(p_i) P_b(phi_i, theta_i), b = 0, 1, 2 组成的 POVM

    Args:
        components: (p, phi, theta) 序列
    Returns:
        含 3 * len(components) 个秩一元素的 Povm
    """
    comps = [(float(p), float(phi), float(theta)) for p, phi, theta in components]
    if not comps:
        raise ConstraintViolationError("no components given", condition="sum_p")
    ps = np.array([c[0] for c in comps])
    phis = np.array([c[1] for c in comps])
    _check_triple_constraints(ps, phis)
    weights, vectors = [], []
    for p, phi, theta in comps:
        for b in range(3):
            weights.append(p)
            vectors.append(p_vector(phi, theta, b))
    return Povm(np.array(weights), np.array(vectors))


def v_basis(theta):
    """von Neumann 测量 V(theta)，三结果 Povm"""
    return triple_povm([(1.0, PHI_VN, theta)])


def partial_measurement(components):
    """分量 (p, phi) 对应的 Kraus 算符 sqrt(p_i) M(phi_i)"""
    comps = [(float(p), float(phi)) for p, phi in components]
    if not comps:
        raise ConstraintViolationError("no components given", condition="sum_p")
    _check_triple_constraints(np.array([c[0] for c in comps]), np.array([c[1] for c in comps]))
    return KrausSet(np.array([math.sqrt(p) * m_matrix(phi) for p, phi in comps]))


def alpha_prime(alpha, phi):
    """经 sqrt(p) M(phi) 作用后三重态的抬升参数"""
    lifted = alpha * math.sin(phi) ** 2
    denom = lifted + 0.5 * (1.0 - alpha) * math.cos(phi) ** 2
    if denom == 0.0:
        raise DomainError("M(phi) annihilates the trine")
    return lifted / denom


def p_prime(alpha, p, phi):
    """任一抬升三重态上观测到分量 sqrt(p) M(phi) 的概率"""
    return 3.0 * p * (alpha * math.sin(phi) ** 2 + 0.5 * (1.0 - alpha) * math.cos(phi) ** 2)


def q_measurement(beta):
    """
    von Neumann 基 Q(beta)

    Q(2/3) 与 V(0) 相同；Q(0) 的 Q_0 在 z 轴上，平面内是两态最优测量。
    """
    if not 0.0 <= beta <= 1.0:
        raise DomainError(f"beta={beta!r} outside [0,1]")
    sb, cb = math.sqrt(beta), math.sqrt(1.0 - beta)
    r = 1.0 / math.sqrt(2.0)
    vectors = np.array([
        [sb, 0.0, cb],
        [-r * cb, r, r * sb],
        [-r * cb, -r, r * sb],
    ])
    return Povm(np.ones(3), vectors)


def lift_or_project(alpha, gamma):
    """
    两结果部分测量：把 T_b(alpha) 变成 T_b(gamma) 或 T_b(0)

    算符为 [A_proj, A_lift]，A_proj = s diag(1,1,0)，A_lift = diag(t,t,1)；
    抬升结果的概率为 alpha/gamma。
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma={gamma!r} outside (0,1)")
    if not 0.0 <= alpha <= gamma:
        raise DomainError(f"alpha={alpha!r} must lie in [0, gamma={gamma!r}]")
    t2 = alpha * (1.0 - gamma) / (gamma * (1.0 - alpha))
    t, s = math.sqrt(t2), math.sqrt(max(0.0, 1.0 - t2))
    a_proj = s * np.diag([1.0, 1.0, 0.0])
    a_lift = np.diag([t, t, 1.0])
    return KrausSet(np.array([a_proj, a_lift]))


def discrimination_vectors(alpha):
    """D_0, D_1, D_2：D_b 与 c != b 的两个三重态 T_c 正交"""
    if not 0.0 <= alpha < 1.0:
        raise DomainError(f"alpha={alpha!r} outside [0,1)")
    sa, za = math.sqrt(alpha), math.sqrt(1.0 - alpha)
    scale = 1.0 / math.sqrt(1.0 + 3.0 * alpha)
    raw = [
        [2.0 * sa, 0.0, za],
        [-sa, math.sqrt(3.0 * alpha), za],
        [-sa, -math.sqrt(3.0 * alpha), za],
    ]
    return tuple(StateVector(scale * np.array(v)) for v in raw)


def first_protocol_kraus(alpha):
    """
    简单自适应协议的四结果测量

    A_b = sqrt(1+3a)/sqrt(3(1-a)) |D_b><D_b| 以概率 3*alpha 识别出 T_b；
    A_3 = sqrt(1-3a)/sqrt(1-a) 投影到平面。
    """
    if not 0.0 <= alpha <= 1.0 / 3.0:
        raise DomainError(f"alpha={alpha!r} outside [0,1/3]")
    c = math.sqrt(1.0 + 3.0 * alpha) / math.sqrt(3.0 * (1.0 - alpha))
    ops = [c * d.projector() for d in discrimination_vectors(alpha)]
    ops.append(math.sqrt((1.0 - 3.0 * alpha) / (1.0 - alpha)) * np.diag([1.0, 1.0, 0.0]))
    return KrausSet(np.array(ops))


def apply_kraus(kraus, state):
    """
    各结果的概率与归一化的测后态

    Returns:
        list of (概率, StateVector；结果不可能出现时为 None)
    """
    v = state.coords if isinstance(state, StateVector) else np.asarray(state, dtype=float)
    if v.size != kraus.dim:
        raise DimensionMismatchError(f"state dimension {v.size} vs operators {kraus.dim}")
    results = []
    for op in kraus.operators:
        out = op @ v
        prob = float(out @ out)
        results.append((prob, StateVector(out / math.sqrt(prob)) if prob > 1e-300 else None))
    return results


def pair_basis_povm(u, w):
    """
    两个纯态在等先验下的最优 von Neumann 基，补全到整个空间

    第一个结果判为 u，第二个判为 w；3 维时第三个结果对应与两者都正交的方向。
    """
    u = u.coords if isinstance(u, StateVector) else np.asarray(u, dtype=float)
    w = w.coords if isinstance(w, StateVector) else np.asarray(w, dtype=float)
    if u.size != w.size:
        raise DimensionMismatchError("pair states differ in dimension")
    s, d = u + w, u - w
    ns, nd = np.linalg.norm(s), np.linalg.norm(d)
    if ns < 1e-12 or nd < 1e-12:
        # same ray: no basis does better than guessing
        e1 = u / np.linalg.norm(u)
        e2 = _orthogonal_unit(e1)
    else:
        s, d = s / ns, d / nd
        e1 = (s + d) / math.sqrt(2.0)
        e2 = (s - d) / math.sqrt(2.0)
    basis = [e1, e2]
    if u.size == 3:
        basis.append(np.cross(e1, e2))
    return Povm(np.ones(len(basis)), np.array(basis))


def _orthogonal_unit(e):
    if e.size == 2:
        return np.array([-e[1], e[0]])
    trial = np.eye(3)[int(np.argmin(np.abs(e)))]
    out = trial - (trial @ e) * e
    return out / np.linalg.norm(out)
