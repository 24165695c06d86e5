"""
info_measures - 互信息、可达信息闭式解与 Holevo 量

POVM 诱导的经典信道上的互信息、Blahut-Arimoto 信道容量、两纯态的可达信息、
Holevo chi，以及互信息沿先验空间某方向的导数。
"""

import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr, xlogy

from src.exceptions import ConvergenceError, DimensionMismatchError, DomainError
from src.linalg_core import (
    LN2, ProbDist, SymMatrix, as_weights, binary_entropy, entropy_bits, von_neumann_entropy,
)
from src.ensembles import lifted_trines

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-9
BA_TOL = 1e-10
BA_MAX_ITER = 100_000
# p0' = 1 and p1' = p2' = -1/2
CANONICAL_DIRECTION = (1.0, -0.5, -0.5)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """行随机矩阵：行是输入，列是测量结果"""
    rows: np.ndarray

    def __post_init__(self):
        q = np.array(self.rows, dtype=float)
        if q.ndim != 2 or q.size == 0:
            raise DomainError(f"transition matrix must be 2-D, got shape {q.shape}")
        if np.any(q < -1e-12):
            raise DomainError("transition matrix has negative entries")
        sums = q.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > ROW_SUM_TOL:
            raise DomainError(f"transition rows sum to {sums}, not 1")
        q = np.clip(q, 0.0, None)
        q.setflags(write=False)
        object.__setattr__(self, "rows", q)

    @property
    def n_in(self):
        return self.rows.shape[0]

    @property
    def n_out(self):
        return self.rows.shape[1]


@dataclass(frozen=True)
class ChannelResult:
    capacity: float
    optimal_priors: ProbDist
    iterations: int


def induced_channel(e, m):
    """
    用 POVM m 测量系综 e 得到的信道 q_ij = r_j <v_j|state_i>^2

    Args:
        e: Ensemble
        m: 同维度的 Povm
    Returns:
        TransitionMatrix，每个态一行
    """
    if e.dim != m.dim:
        raise DimensionMismatchError(f"ensemble dimension {e.dim} vs povm dimension {m.dim}")
    overlaps = (e.vectors @ m.vectors.T) ** 2
    return TransitionMatrix(overlaps * m.weights[None, :])


def _mutual_information(p, q):
    out = p @ q
    value = entropy_bits(out) - float(p @ entropy_bits(q, axis=1))
    return max(0.0, float(value))


def mutual_information(priors, t):
    """输入先验与 TransitionMatrix 的互信息 I(X;Y)，单位 bit"""
    p = as_weights(priors)
    q = t.rows if isinstance(t, TransitionMatrix) else np.asarray(t, dtype=float)
    if p.size != q.shape[0]:
        raise DimensionMismatchError(f"{p.size} priors for {q.shape[0]} channel inputs")
    return _mutual_information(p, q)


def blahut_arimoto(t, tol=BA_TOL, max_iter=BA_MAX_ITER):
    """
    Blahut-Arimoto 迭代求信道容量

    当 max_x D(W(.|x) || r) - I(p) < tol (bit) 时停止，该差值是到容量距离的上界。

    Returns:
        ChannelResult(capacity, optimal_priors, iterations)
    """
    q = t.rows if isinstance(t, TransitionMatrix) else TransitionMatrix(t).rows
    n_in = q.shape[0]
    p = np.full(n_in, 1.0 / n_in)
    tol_nats = tol * LN2
    for iteration in range(1, max_iter + 1):
        r = p @ q
        divergence = np.sum(rel_entr(q, r[None, :]), axis=1)
        info = float(p @ divergence)
        upper = float(np.max(divergence))
        if upper - info < tol_nats:
            logger.debug(f"Blahut-Arimoto converged after {iteration} iterations")
            return ChannelResult(info / LN2, ProbDist(p), iteration)
        p = p * np.exp(divergence - upper)
        p /= p.sum()
    raise ConvergenceError(f"Blahut-Arimoto did not reach tol={tol} within {max_iter} iterations")


def two_state_accessible_info(kappa, p):
    """
    两个纯态的可达信息，重叠 kappa = |<v1|v2>|^2，先验 (p, 1-p)：
    H(p) - H(1/2 + sqrt(1 - 4 kappa p (1-p)) / 2)
    """
    if not 0.0 <= kappa <= 1.0:
        raise DomainError(f"kappa={kappa!r} outside [0,1]")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p={p!r} outside [0,1]")
    root = math.sqrt(max(0.0, 1.0 - 4.0 * kappa * p * (1.0 - p)))
    return max(0.0, binary_entropy(p) - binary_entropy(0.5 + 0.5 * root))


def holevo_chi(e):
    """纯态系综的 Holevo 量 chi = S(sum_i p_i |v_i><v_i|)"""
    return von_neumann_entropy(SymMatrix.symmetrized(e.density_matrix()))


def holevo_capacity(alpha):
    """抬升三重态的 Holevo 容量 (由对称性，均匀先验最优)"""
    return holevo_chi(lifted_trines(alpha))


def _check_direction(direction, k):
    d = np.asarray(direction, dtype=float).reshape(-1)
    if d.size != k:
        raise DimensionMismatchError(f"direction has {d.size} entries for {k} states")
    if abs(float(d.sum())) > 1e-12:
        raise DomainError(f"direction sums to {d.sum()!r}; it must sum to zero")
    return d


def _derivative_terms(p, d, c):
    # c: (k, n) unweighted overlaps; returns I'_v per column
    out = p @ c
    flow = d @ c
    first = np.where(flow == 0.0, 0.0, -flow * np.log2(np.where(out > 0.0, out, 1.0)))
    first = np.where((out <= 0.0) & (flow != 0.0), np.copysign(np.inf, flow), first)
    second = d @ (xlogy(c, c) / LN2)
    return first + second


def projector_derivative(priors, e, v, direction):
    """
    单个投影的导数项 I'_v

    -(sum_i p'_i q_i) log2(sum_i p_i q_i) + sum_i p'_i q_i log2 q_i。与
    projector_information 的真实导数相差 -(sum_i p'_i q_i)/ln2，这一项在完整 POVM
    上求和为零。

    Args:
        priors: e 中各态的 ProbDist
        e: Ensemble
        v: StateVector 或坐标
        direction: 和为零的方向
    """
    p = as_weights(priors)
    d = _check_direction(direction, len(e))
    vec = v.coords if hasattr(v, "coords") else np.asarray(v, dtype=float)
    c = ((e.vectors @ vec) ** 2)[:, None]
    return float(_derivative_terms(p, d, c)[0])


def prior_derivative(e, m, direction):
    """
    mutual_information(e.priors, induced_channel(e, m)) 的方向导数

    等于 sum_j r_j I'_{v_j}；概率流为零的结果不贡献。
    """
    if e.dim != m.dim:
        raise DimensionMismatchError(f"ensemble dimension {e.dim} vs povm dimension {m.dim}")
    d = _check_direction(direction, len(e))
    c = (e.vectors @ m.vectors.T) ** 2
    return float(np.sum(m.weights * _derivative_terms(e.priors.weights, d, c)))
