"""
simplex - 小规模等式约束线性规划的修正单纯形法

    maximize  c x   subject to  A x = b,  x >= 0

行数很少 (对称 3x3 约束最多六行)，列数可达数万，
因此每次迭代稠密地重算基矩阵的逆，定价只是一次矩阵向量乘积。
第一阶段从人工基出发。定价采用 Dantzig 最大约化成本；
连续退化转轴后切换到 Bland 规则，直到目标值再次变化，从而避免循环。
"""

import logging
from dataclasses import dataclass

import numpy as np

from src.exceptions import ConvergenceError, InfeasibleError, UnboundedError

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
FEASIBILITY_TOL = 1e-9
DEGENERATE_RUN = 20
MAX_ITER = 50_000


@dataclass
class SimplexResult:
    x: np.ndarray
    value: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    basis: np.ndarray
    iterations: int


def _iterate(a, b, cost, basis, rule, tol, max_iter):
    degenerate = 0
    for iteration in range(max_iter):
        binv = np.linalg.inv(a[:, basis])
        x_b = binv @ b
        y = cost[basis] @ binv
        reduced = cost - y @ a
        reduced[basis] = 0.0
        candidates = np.flatnonzero(reduced > tol)
        if candidates.size == 0:
            return basis, iteration
        if rule == "bland" or degenerate >= DEGENERATE_RUN:
            entering = candidates[0]
        else:
            entering = candidates[np.argmax(reduced[candidates])]
        direction = binv @ a[:, entering]
        rows = np.flatnonzero(direction > tol)
        if rows.size == 0:
            raise UnboundedError(f"column {entering} improves the objective without bound")
        ratios = np.clip(x_b[rows], 0.0, None) / direction[rows]
        step = ratios.min()
        tied = rows[ratios <= step + tol * max(1.0, step)]
        # Bland: among tied rows leave the smallest basic index
        leaving = tied[np.argmin(basis[tied])]
        degenerate = degenerate + 1 if step <= tol else 0
        basis[leaving] = entering
    raise ConvergenceError(f"simplex did not terminate in {max_iter} iterations")


def solve(c, a, b, rule="dantzig", tol=PIVOT_TOL, max_iter=MAX_ITER):
    """
    两阶段修正单纯形法求解 max c x s.t. a x = b, x >= 0

    Args:
        c: (n,) 目标系数
        a: (m, n) 约束矩阵
        b: (m,) 右端项
        rule: "dantzig" (退化时回退到 Bland) 或 "bland"
    Returns:
        SimplexResult：原始解、对偶变量 y (最优时 A^T y >= c) 和约化成本 c - y A
    Raises:
        InfeasibleError, UnboundedError, ConvergenceError
    """
    c = np.asarray(c, dtype=float)
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    m, n = a.shape
    sign = np.where(b < 0.0, -1.0, 1.0)
    a *= sign[:, None]
    b *= sign

    # phase 1: maximize -sum(artificials)
    a1 = np.hstack([a, np.eye(m)])
    cost1 = np.concatenate([np.zeros(n), -np.ones(m)])
    basis = np.arange(n, n + m)
    basis, it1 = _iterate(a1, b, cost1, basis, rule, tol, max_iter)
    x_b = np.linalg.solve(a1[:, basis], b)
    infeasibility = float(np.sum(x_b[basis >= n]))
    if infeasibility > FEASIBILITY_TOL * max(1.0, float(np.abs(b).max())):
        raise InfeasibleError(f"phase 1 ended with artificial mass {infeasibility:.3e}")

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = np.ones(m, dtype=bool)
    binv = np.linalg.inv(a1[:, basis])
    for r in range(m):
        if basis[r] < n:
            continue
        row = binv[r] @ a
        row[basis[basis < n]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > tol:
            basis[r] = j
            binv = np.linalg.inv(a1[:, basis])
        else:
            keep[r] = False
    if not keep.all():
        logger.debug(f"dropping {int((~keep).sum())} redundant constraint rows")
    a_red, b_red, basis = a[keep], b[keep], basis[keep]

    basis, it2 = _iterate(a_red, b_red, c, basis, rule, tol, max_iter)
    binv = np.linalg.inv(a_red[:, basis])
    x = np.zeros(n)
    x[basis] = np.clip(binv @ b_red, 0.0, None)
    y_red = c[basis] @ binv
    duals = np.zeros(m)
    duals[keep] = y_red
    duals *= sign
    reduced = c - y_red @ a_red
    reduced[basis] = 0.0
    logger.debug(f"simplex finished: phase1 {it1} + phase2 {it2} pivots")
    return SimplexResult(x=x, value=float(c @ x), duals=duals, reduced_costs=reduced,
                         basis=basis.copy(), iterations=it1 + it2)
