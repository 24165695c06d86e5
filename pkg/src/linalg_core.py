"""
linalg_core - 实数线性代数与熵的基础工具

态是 2 维或 3 维的实单位向量，矩阵是实对称矩阵，熵一律以 bit 为单位，
约定 0*log(0) = 0。
"""

import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import entr

from src.exceptions import DomainError, DimensionMismatchError

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
NORM_TOL = 1e-12
PROB_SUM_TOL = 1e-9
EIGEN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StateVector:
    """纯态：2 维或 3 维实单位向量"""
    coords: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coords, dtype=float).reshape(-1)
        if arr.size not in (2, 3):
            raise DomainError(f"state dimension must be 2 or 3, got {arr.size}")
        norm = float(np.linalg.norm(arr))
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"state norm {norm!r} differs from 1")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def dim(self):
        return self.coords.size

    @classmethod
    def normalized(cls, coords):
        """把任意非零向量归一化成态"""
        arr = np.asarray(coords, dtype=float).reshape(-1)
        norm = np.linalg.norm(arr)
        if norm == 0.0:
            raise DomainError("cannot normalize the zero vector")
        return cls(arr / norm)

    def overlap(self, other):
        """内积平方 |<self|other>|^2"""
        other_coords = other.coords if isinstance(other, StateVector) else np.asarray(other, dtype=float)
        if other_coords.size != self.dim:
            raise DimensionMismatchError(f"dimensions {self.dim} and {other_coords.size} differ")
        return float(np.dot(self.coords, other_coords) ** 2)

    def projector(self):
        return np.outer(self.coords, self.coords)

    def __repr__(self):
        return f"StateVector({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """2x2 或 3x3 实对称矩阵 (严格检查对称性)"""
    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=float)
        if arr.shape not in ((2, 2), (3, 3)):
            raise DomainError(f"symmetric matrix must be 2x2 or 3x3, got {arr.shape}")
        if not np.array_equal(arr, arr.T):
            raise DomainError("matrix is not exactly symmetric")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def symmetrized(cls, entries):
        """与转置取平均，消除舍入造成的不对称"""
        arr = np.asarray(entries, dtype=float)
        return cls(0.5 * (arr + arr.T))

    @classmethod
    def from_projectors(cls, weights, vectors):
        """sum_j r_j v_j v_j^T，weights 为权重，vectors 为 (n, d) 数组"""
        w = np.asarray(weights, dtype=float)
        v = np.asarray(vectors, dtype=float)
        return cls.symmetrized(np.einsum("j,ja,jb->ab", w, v, v))

    @property
    def dim(self):
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class ProbDist:
    """概率向量：分量在 [0,1] 内，和为 1 (容差 1e-9)"""
    weights: np.ndarray

    def __post_init__(self):
        arr = np.array(self.weights, dtype=float).reshape(-1)
        if arr.size == 0:
            raise DomainError("empty probability distribution")
        if np.any(arr < -1e-15) or np.any(arr > 1.0 + 1e-15):
            raise DomainError(f"probabilities outside [0,1]: {arr}")
        total = float(arr.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        arr = np.clip(arr, 0.0, 1.0)
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)

    @classmethod
    def uniform(cls, k):
        return cls(np.full(k, 1.0 / k))

    def __len__(self):
        return self.weights.size

    def __getitem__(self, i):
        return float(self.weights[i])

    def __iter__(self):
        return iter(self.weights.tolist())

    def __repr__(self):
        return f"ProbDist({np.array2string(self.weights, precision=6)})"


def as_weights(d):
    """ProbDist 或任意序列转成 float 数组 (不做校验)"""
    if isinstance(d, ProbDist):
        return d.weights
    return np.asarray(d, dtype=float).reshape(-1)


def entropy_bits(weights, axis=None):
    """非负权重的 Shannon 熵 (bit)，不检查归一化"""
    return np.sum(entr(np.asarray(weights, dtype=float)), axis=axis) / LN2


def binary_entropy(x):
    """
    二元熵 H(x)，单位 bit

    Args:
        x: [0, 1] 内的概率
    Returns:
        -x log2 x - (1-x) log2 (1-x)
    """
    x = float(x)
    if not -1e-12 <= x <= 1.0 + 1e-12:
        raise DomainError(f"binary_entropy argument {x!r} outside [0,1]")
    x = min(max(x, 0.0), 1.0)
    return float(entropy_bits([x, 1.0 - x]))


def binary_entropy_array(x):
    """向量化的二元熵，输入先截断到 [0,1]"""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return (entr(x) + entr(1.0 - x)) / LN2


def shannon_entropy(d):
    """ProbDist (或可转换为 ProbDist 的序列) 的 Shannon 熵"""
    if not isinstance(d, ProbDist):
        d = ProbDist(d)
    return float(entropy_bits(d.weights))


def _eig2(a):
    mid = 0.5 * (a[0, 0] + a[1, 1])
    half = 0.5 * (a[0, 0] - a[1, 1])
    d = math.hypot(half, a[0, 1])
    return np.array([mid - d, mid + d])


def _eig3(a):
    # trigonometric roots, then deflate on the isolated one
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    if p1 == 0.0:
        return np.sort(np.diag(a).copy())
    q = np.trace(a) / 3.0
    p2 = (a[0, 0] - q) ** 2 + (a[1, 1] - q) ** 2 + (a[2, 2] - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    b = (a - q * np.eye(3)) / p
    r = min(max(np.linalg.det(b) / 2.0, -1.0), 1.0)
    phi = math.acos(r) / 3.0
    eig1 = q + 2.0 * p * math.cos(phi)
    eig3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    roots = np.sort(np.array([eig1, 3.0 * q - eig1 - eig3, eig3]))

    # the close pair comes from the 2x2 block orthogonal to the isolated root
    isolated = eig1 if r >= 0.0 else eig3
    shifted = a - isolated * np.eye(3)
    crosses = np.array([np.cross(shifted[0], shifted[1]), np.cross(shifted[0], shifted[2]),
                        np.cross(shifted[1], shifted[2])])
    norms = np.linalg.norm(crosses, axis=1)
    if norms.max() == 0.0:
        return roots
    v = crosses[np.argmax(norms)] / norms.max()
    u = np.cross(v, np.eye(3)[np.argmin(np.abs(v))])
    u /= np.linalg.norm(u)
    w = np.cross(v, u)
    off = 0.5 * (u @ a @ w + w @ a @ u)
    rest = _eig2(np.array([[u @ a @ u, off], [off, w @ a @ w]]))
    return np.sort(np.array([v @ a @ v, rest[0], rest[1]]))


def sym_eigenvalues(m):
    """
    2x2 或 3x3 实对称矩阵的特征值，升序

    2x2 用二次公式；3x3 先用三角法解特征多项式，再取孤立根的特征向量，
    在其正交补上化成 2x2 问题，近简并的一对根也能保持 1e-10 的精度。
    """
    a = m.entries if isinstance(m, SymMatrix) else np.asarray(m, dtype=float)
    if a.shape == (2, 2):
        return _eig2(a)
    if a.shape == (3, 3):
        return _eig3(a)
    raise DomainError(f"sym_eigenvalues supports 2x2 and 3x3 only, got {a.shape}")


def von_neumann_entropy(m):
    """von Neumann 熵 S(rho)，单位 bit；微小的负特征值按 0 处理"""
    evals = sym_eigenvalues(m)
    if np.min(evals) < -EIGEN_TOL:
        logger.warning(f"density matrix has eigenvalue {np.min(evals):.3e} below zero")
    return float(entropy_bits(np.clip(evals, 0.0, None)))


def psd_sqrt(a):
    """半正定矩阵的对称平方根 (负特征值截断为 0)"""
    a = np.asarray(a, dtype=float)
    evals, evecs = np.linalg.eigh(0.5 * (a + a.T))
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T
