"""
lp_povm - 离散化投影集合上的线性规划求可达信息

秩一 POVM {r_j v_j v_j^T} 的互信息对权重 r_j 是线性的，因此在固定候选方向集合上
求最大值是一个线性规划，约束为完备性等式 sum_j r_j v_j v_j^T = I。
平面情形下对偶解是一条压住单投影信息的正弦曲线，可作为最优性证书。
"""

import math
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import brentq, minimize_scalar
from scipy.special import xlogy

from src import simplex
from src.exceptions import (
    DimensionMismatchError, DomainError, InfeasibleError, TrineError, UnboundedError,
)
from src.ensembles import lifted_trines, planar_trines
from src.linalg_core import LN2, ProbDist, as_weights
from src.runner import run_bounded

logger = logging.getLogger(__name__)

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
SUPPORT_TOL = 1e-12
ALTERNATIVE_TOL = 1e-9
COMPLETENESS_TOL = 1e-7
CERTIFICATE_TOL = 1e-7
SCAN_COLUMNS = ["alpha", "p0", "p1", "p2", "access_info", "support_size", "status"]
REFINE_PASSES = 4
REFINE_COUNT = 81
LINE_XATOL = 1e-4


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """单位方向集合，v 与 -v 视为同一方向"""
    vectors: np.ndarray
    resolution: int

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] not in (2, 3):
            raise DomainError(f"candidate vectors must be (n, 2) or (n, 3), got {v.shape}")
        if np.any(np.abs(np.linalg.norm(v, axis=1) - 1.0) > 1e-12):
            raise DomainError("candidate vectors must be unit vectors")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def from_vectors(cls, vectors, resolution=None):
        """归一化、统一每条直线的符号并去掉重复方向"""
        v = np.asarray(vectors, dtype=float)
        v = v / np.linalg.norm(v, axis=1)[:, None]
        v = np.array([_canonical_sign(row) for row in v])
        _, first = np.unique(np.round(v, 12), axis=0, return_index=True)
        v = v[np.sort(first)]
        return cls(v, resolution if resolution is not None else len(v))

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.vectors.shape[0]


def _canonical_sign(row):
    nonzero = np.flatnonzero(np.abs(row) > 1e-15)
    if nonzero.size and row[nonzero[-1]] < 0.0:
        return -row
    return row


@dataclass(frozen=True, eq=False)
class LpSolution:
    value: float
    weights: tuple
    status: str
    candidates: CandidateSet = None
    alternative: tuple = ()
    duals: np.ndarray = None
    iterations: int = 0

    @property
    def support_size(self):
        return len(self.weights)

    def support_vectors(self):
        return np.array([self.candidates.vectors[i] for i, _ in self.weights])


@dataclass(frozen=True)
class DualCertificate:
    """offset + amplitude * sin(2 theta + phase) >= I_Pi(theta)."""
    offset: float
    amplitude: float
    phase: float
    tangencies: tuple = ()
    max_violation: float = 0.0
    certified: bool = False
    third_gap: float = math.inf
    lp_value: float = math.nan

    def __call__(self, theta):
        return self.offset + self.amplitude * np.sin(2.0 * np.asarray(theta) + self.phase)


def planar_grid(n):
    """theta_k = k pi / n, k = 0..n-1，方向为 (cos theta, sin theta)"""
    if n < 4:
        raise DomainError(f"planar grid needs n >= 4, got {n}")
    theta = np.arange(n) * math.pi / n
    return CandidateSet(np.column_stack([np.cos(theta), np.sin(theta)]), n)


def sphere_grid(n):
    """
    上半球上的 Fibonacci 螺旋网格

    z_k = (k + 1/2)/n 使所有点严格位于赤道之上，任意两个方向都不对径。
    """
    if n < 16:
        raise DomainError(f"sphere grid needs n >= 16, got {n}")
    k = np.arange(n)
    z = (k + 0.5) / n
    r = np.sqrt(1.0 - z * z)
    phi = k * GOLDEN_ANGLE
    return CandidateSet(np.column_stack([r * np.cos(phi), r * np.sin(phi), z]), n)


def projector_information_many(priors, e, vectors):
    """`vectors` 每一行的单投影信息"""
    p = as_weights(priors)
    v = np.asarray(vectors, dtype=float)
    if v.shape[-1] != e.dim:
        raise DimensionMismatchError(f"candidate dimension {v.shape[-1]} vs ensemble dimension {e.dim}")
    q = (v @ e.vectors.T) ** 2
    s = q @ p
    return (-xlogy(s, s) + xlogy(q, q) @ p) / LN2


def projector_information(priors, e, v):
    """
    单投影信息 -(sum_i p_i q_i) log2(sum_i p_i q_i) + sum_i p_i q_i log2 q_i，q_i = <T_i|v>^2
    """
    vec = v.coords if hasattr(v, "coords") else np.asarray(v, dtype=float)
    return float(projector_information_many(priors, e, vec[None, :])[0])


def _constraint_system(vectors):
    d = vectors.shape[1]
    pairs = [(i, j) for i in range(d) for j in range(i, d)]
    a = np.array([vectors[:, i] * vectors[:, j] for i, j in pairs])
    b = np.array([1.0 if i == j else 0.0 for i, j in pairs])
    return a, b


def max_accessible_info(e, priors, c, refine=False, rule="dantzig"):
    """
    在 r >= 0、sum_j r_j v_j v_j^T = I 下最大化 sum_j r_j I(v_j)

    Args:
        e: Ensemble
        priors: e 中各态的 ProbDist
        c: 同维度的 CandidateSet
        refine: 在支撑周围加局部网格后再求解一次
        rule: 单纯形定价规则
    Returns:
        LpSolution (状态为 "optimal"、"infeasible" 或 "unbounded")
    """
    if c.dim != e.dim:
        raise DimensionMismatchError(f"candidate dimension {c.dim} vs ensemble dimension {e.dim}")
    p = as_weights(priors)
    if p.size != len(e):
        raise DimensionMismatchError(f"{p.size} priors for {len(e)} states")
    objective = projector_information_many(p, e, c.vectors)
    a, b = _constraint_system(c.vectors)
    try:
        result = simplex.solve(objective, a, b, rule=rule)
    except InfeasibleError as exc:
        logger.warning(f"LP infeasible on {len(c)} candidates: {exc}")
        return LpSolution(math.nan, (), "infeasible", c)
    except UnboundedError as exc:
        logger.warning(f"LP unbounded: {exc}")
        return LpSolution(math.inf, (), "unbounded", c)

    active = np.flatnonzero(result.x > SUPPORT_TOL)
    weights = tuple((int(i), float(result.x[i])) for i in active)
    nonbasic = np.setdiff1d(np.arange(len(c)), result.basis)
    alternative = tuple(int(j) for j in nonbasic if abs(result.reduced_costs[j]) <= ALTERNATIVE_TOL)
    residual = np.max(np.abs(np.einsum("j,ja,jb->ab", result.x[active], c.vectors[active],
                                       c.vectors[active]) - np.eye(c.dim)))
    if residual > COMPLETENESS_TOL:
        logger.warning(f"LP support completeness residual {residual:.3e}")
    solution = LpSolution(result.value, weights, "optimal", c, alternative, result.duals, result.iterations)
    if refine:
        refined = refine_candidates(solution, c)
        return max_accessible_info(e, p, refined, refine=False, rule=rule)
    return solution


def grid_spacing(c):
    """
    候选集合的典型角间距 (弧度)

    平面网格为 pi/n，球面螺旋网格为 sqrt(2 pi / n)。
    """
    if c.dim == 2:
        return math.pi / c.resolution
    return math.sqrt(2.0 * math.pi / c.resolution)


def refine_candidates(solution, c, radius=None, count=49):
    """
    在每个支撑方向周围加一小片局部网格

    Args:
        solution: LpSolution
        c: 被扩充的 CandidateSet
        radius: 局部网格半径，默认 grid_spacing(c)
        count: 每个支撑方向新增的点数 (球面上取 side x side)
    Returns:
        CandidateSet
    """
    if radius is None:
        radius = grid_spacing(c)
    extra = []
    for v in solution.support_vectors():
        if c.dim == 2:
            theta = math.atan2(v[1], v[0])
            for delta in np.linspace(-radius, radius, count):
                extra.append([math.cos(theta + delta), math.sin(theta + delta)])
        else:
            t1 = np.cross(v, np.eye(3)[int(np.argmin(np.abs(v)))])
            t1 /= np.linalg.norm(t1)
            t2 = np.cross(v, t1)
            side = max(2, int(math.ceil(math.sqrt(count))))
            for s in np.linspace(-radius, radius, side):
                for t in np.linspace(-radius, radius, side):
                    extra.append(v + s * t1 + t * t2)
    if not extra:
        return c
    return CandidateSet.from_vectors(np.vstack([c.vectors, np.array(extra)]), c.resolution)


def _planar_angles(e):
    if e.dim != 2:
        raise DimensionMismatchError("dual certificates need a planar ensemble")
    v = e.vectors
    return np.arctan2(v[:, 1], v[:, 0])


def planar_information(p, angles, theta):
    """以角度给出的平面态的 I_Pi(theta)"""
    q = np.cos(np.subtract.outer(np.asarray(theta, dtype=float), angles)) ** 2
    s = q @ p
    return (-xlogy(s, s) + xlogy(q, q) @ p) / LN2


def planar_information_slope(p, angles, theta):
    """d I_Pi / d theta；由于 sum_i p_i q_i' = s'，1/ln2 项相互抵消"""
    diff = np.subtract.outer(np.asarray(theta, dtype=float), angles)
    q = np.cos(diff) ** 2
    dq = -np.sin(2.0 * diff)
    s = q @ p
    ds = dq @ p
    log_q = np.log2(np.where(q > 0.0, q, 1.0))
    log_s = np.log2(np.where(s > 0.0, s, 1.0))
    return -ds * log_s + (dq * log_q) @ p


def _two_point_sine(p, angles, theta_guess):
    """在 theta1 与 theta1 + pi/2 处与 I_Pi 相切且斜率一致的正弦，不存在时返回 None"""
    def balance(t):
        return float(planar_information_slope(p, angles, t) + planar_information_slope(p, angles, t + math.pi / 2))

    base = theta_guess % (math.pi / 2)
    root = None
    for width in (0.05, 0.2, math.pi / 4):
        lo, hi = base - width, base + width
        if balance(lo) * balance(hi) < 0.0:
            root = brentq(balance, lo, hi, xtol=1e-14)
            break
        if balance(base) == 0.0:
            root = base
            break
    if root is None:
        return None
    root = root % math.pi
    i1 = float(planar_information(p, angles, root))
    i2 = float(planar_information(p, angles, root + math.pi / 2))
    slope = float(planar_information_slope(p, angles, root))
    c2, s2 = math.cos(2.0 * root), math.sin(2.0 * root)
    half = 0.5 * (i1 - i2)
    cos_coef = c2 * half - s2 * 0.5 * slope
    sin_coef = s2 * half + c2 * 0.5 * slope
    offset = 0.5 * (i1 + i2)
    tangencies = tuple(sorted([root, (root + math.pi / 2) % math.pi]))
    return offset, cos_coef, sin_coef, tangencies


def _as_certificate_parts(offset, cos_coef, sin_coef):
    return offset, math.hypot(cos_coef, sin_coef), math.atan2(cos_coef, sin_coef)


def _gap_profile(p, angles, offset, cos_coef, sin_coef, n):
    theta = np.arange(n) * math.pi / n
    gap = offset + cos_coef * np.cos(2.0 * theta) + sin_coef * np.sin(2.0 * theta) - planar_information(p, angles, theta)
    return theta, gap


def _circular_distance(a, b):
    d = np.abs(np.asarray(a) - b) % math.pi
    return np.minimum(d, math.pi - d)


def _smallest_other_gap(theta, gap, tangencies, exclusion=0.05):
    left, right = np.roll(gap, 1), np.roll(gap, -1)
    minima = (gap <= left) & (gap <= right)
    for t in tangencies:
        minima &= _circular_distance(theta, t) > exclusion
    return float(gap[minima].min()) if minima.any() else math.inf


def _support_clusters(angles, step):
    """相距不超过几个网格步长 (mod pi) 的支撑角分组的中心"""
    if len(angles) == 0:
        return ()
    a = np.sort(np.asarray(angles) % math.pi)
    groups = [[a[0]]]
    for x in a[1:]:
        if x - groups[-1][-1] <= 3.0 * step:
            groups[-1].append(x)
        else:
            groups.append([x])
    if len(groups) > 1 and (groups[0][0] + math.pi) - groups[-1][-1] <= 3.0 * step:
        groups[0] = [x - math.pi for x in groups.pop()] + groups[0]
    return tuple(sorted(float(np.mean(g)) % math.pi for g in groups))


def dual_certificate(priors, e, n=3600, verify_n=20000):
    """
    压住 I_Pi(theta) 的正弦曲线 offset + amplitude sin(2 theta + phase)

    先用 planar_grid(n) 上的线性规划定位支撑。若一对正交切点能解释支撑，
    就由这两点精确构造证书，否则使用线性规划的对偶解。
    结果在 verify_n 个角度上校验，`certified` 记录违反量是否低于 1e-7。
    """
    p = as_weights(priors)
    angles = _planar_angles(e)
    grid = planar_grid(n)
    solution = max_accessible_info(e, p, grid)
    if solution.status != "optimal":
        return DualCertificate(math.nan, math.nan, math.nan, lp_value=solution.value)
    support = [i * math.pi / n for i, _ in solution.weights]

    third_gap = math.inf
    two_point = _two_point_sine(p, angles, support[0]) if support else None
    if two_point is not None:
        offset, cos_coef, sin_coef, tangencies = two_point
        theta, gap = _gap_profile(p, angles, offset, cos_coef, sin_coef, verify_n)
        violation = max(0.0, -float(gap.min()))
        third_gap = _smallest_other_gap(theta, gap, tangencies)
        if violation <= CERTIFICATE_TOL:
            offset, amplitude, phase = _as_certificate_parts(offset, cos_coef, sin_coef)
            return DualCertificate(offset, amplitude, phase, tangencies, violation, True,
                                   third_gap, solution.value)

    # fall back to the LP duals: rows are (xx, xy, yy)
    y_xx, y_xy, y_yy = solution.duals
    offset = 0.5 * (y_xx + y_yy)
    cos_coef, sin_coef = 0.5 * (y_xx - y_yy), 0.5 * y_xy
    _, gap = _gap_profile(p, angles, offset, cos_coef, sin_coef, verify_n)
    violation = max(0.0, -float(gap.min()))
    if violation > CERTIFICATE_TOL:
        logger.warning(f"dual sine violated by {violation:.3e} off the LP grid")
    offset, amplitude, phase = _as_certificate_parts(offset, cos_coef, sin_coef)
    return DualCertificate(offset, amplitude, phase, _support_clusters(support, math.pi / n),
                           violation, violation <= CERTIFICATE_TOL, third_gap, solution.value)


def third_tangency_gap(p0, verify_n=20000):
    """
    平面三重态在先验 (p0, (1-p0)/2, (1-p0)/2) 下，过 pi/4 与 3pi/4 两切点的正弦
    与 I_Pi 在这两点之外的最小间隙。两个切点足够时为正。
    """
    p = np.array([p0, 0.5 * (1.0 - p0), 0.5 * (1.0 - p0)])
    angles = _planar_angles(planar_trines())
    offset, cos_coef, sin_coef, tangencies = _two_point_sine(p, angles, math.pi / 4)
    theta, gap = _gap_profile(p, angles, offset, cos_coef, sin_coef, verify_n)
    return _smallest_other_gap(theta, gap, tangencies)


def find_third_tangency_prior(lo=0.0, hi=0.12):
    """出现第三个切点的 p0 (两切点间隙降到零)"""
    return brentq(third_tangency_gap, lo, hi, xtol=1e-7)


def simplex_lattice(denominator):
    """满足 a + b + c = D 的 (a, b, c)，按字典序"""
    return [(a, b, denominator - a - b) for a in range(denominator + 1) for b in range(denominator + 1 - a)]


def simplex_scan(alpha, denominator, c, jobs=1, rule="dantzig"):
    """
    每个格点先验 (a/D, b/D, c/D) 上的线性规划可达信息

    平面候选集合扫描平面三重态 (alpha 必须为 0)，球面集合扫描抬升三重态。
    失败的点保留一行并记录状态。

    Returns:
        pandas.DataFrame，列为 alpha, p0, p1, p2, access_info, support_size, status
    """
    if denominator < 6:
        raise DomainError(f"simplex scan needs denominator >= 6, got {denominator}")
    if c.dim == 2:
        if alpha != 0.0:
            raise DimensionMismatchError("a planar candidate set can only scan alpha = 0")
        ensemble = planar_trines()
    else:
        ensemble = lifted_trines(alpha)

    def solve_point(point):
        priors = np.array(point, dtype=float) / denominator
        try:
            sol = max_accessible_info(ensemble, ProbDist(priors), c, rule=rule)
            return (alpha, *priors, sol.value, sol.support_size, sol.status)
        except TrineError as exc:
            logger.error(f"scan point {point} failed: {exc}")
            return (alpha, *priors, math.nan, 0, f"error: {exc}")

    rows = run_bounded(solve_point, simplex_lattice(denominator), jobs=jobs,
                       desc=f"simplex scan alpha={alpha}")
    return pd.DataFrame(rows, columns=SCAN_COLUMNS)


def find_local_maxima(frame, denominator, tol=1e-9):
    """
    单纯形扫描的离散局部极大值

    没有相邻格点比它高出 tol 以上的格点即为局部极大；取值相等的相邻极大
    构成一个平台，只在平台的第一个点报告一次。
    """
    values = {}
    for row in frame.itertuples(index=False):
        if row.status != "optimal":
            continue
        key = (int(round(row.p0 * denominator)), int(round(row.p1 * denominator)))
        values[key] = row.access_info
    moves = [(1, -1), (-1, 1), (1, 0), (-1, 0), (0, 1), (0, -1)]

    def neighbors(key):
        for da, db in moves:
            other = (key[0] + da, key[1] + db)
            if other in values:
                yield other

    peaks = {k for k, v in values.items() if all(values[o] <= v + tol for o in neighbors(k))}
    clusters, seen = [], set()
    for start in sorted(peaks):
        if start in seen:
            continue
        stack, members = [start], []
        seen.add(start)
        while stack:
            k = stack.pop()
            members.append(k)
            for o in neighbors(k):
                if o in peaks and o not in seen and abs(values[o] - values[k]) <= tol:
                    seen.add(o)
                    stack.append(o)
        a, b = min(members)
        clusters.append({"p0": a / denominator, "p1": b / denominator,
                         "p2": (denominator - a - b) / denominator,
                         "access_info": values[(a, b)], "size": len(members)})
    return pd.DataFrame(clusters, columns=["p0", "p1", "p2", "access_info", "size"])


def refined_accessible_info(e, priors, c, extra=None, passes=REFINE_PASSES, count=REFINE_COUNT):
    """
    多轮局部加密后的线性规划

    第一轮在 c (加上 extra 方向) 上求解；之后每轮在当前支撑周围加一片
    side x side 的局部网格，半径从 grid_spacing(c) 开始，每轮缩为上一轮的步长。

    Args:
        e: Ensemble
        priors: ProbDist
        c: CandidateSet
        extra: 额外的候选方向 (n, d)，可为 None
        passes: 加密轮数
        count: 每个支撑方向每轮新增的点数
    Returns:
        LpSolution (最后一轮)
    """
    if extra is not None and len(extra):
        c = CandidateSet.from_vectors(np.vstack([c.vectors, np.asarray(extra, dtype=float)]), c.resolution)
    solution = max_accessible_info(e, priors, c)
    radius = grid_spacing(c)
    side = max(2, int(math.ceil(math.sqrt(count))))
    for _ in range(passes):
        if solution.status != "optimal":
            break
        c = refine_candidates(solution, solution.candidates, radius, count)
        solution = max_accessible_info(e, priors, c)
        radius *= 2.0 / (side - 1)
    return solution


def symmetric_priors(p0):
    return ProbDist([p0, 0.5 * (1.0 - p0), 0.5 * (1.0 - p0)])


def symmetric_line_scan(alpha, c, p0_values, extra=None, jobs=1):
    """
    沿对称线 (p0, (1-p0)/2, (1-p0)/2) 的加密线性规划扫描

    Args:
        alpha: 抬升参数
        c: 球面 CandidateSet
        p0_values: p0 的取值
        extra: 可选函数 priors -> 额外候选方向
        jobs: 并发数
    Returns:
        pandas.DataFrame，列与 simplex_scan 相同
    """
    ensemble = lifted_trines(alpha)

    def solve_point(p0):
        priors = symmetric_priors(float(p0))
        try:
            sol = refined_accessible_info(ensemble, priors, c, None if extra is None else extra(priors))
            return (alpha, *priors.weights, sol.value, sol.support_size, sol.status)
        except TrineError as exc:
            logger.error(f"line point p0={p0} failed: {exc}")
            return (alpha, *priors.weights, math.nan, 0, f"error: {exc}")

    rows = run_bounded(solve_point, list(p0_values), jobs=jobs, desc=f"symmetric line alpha={alpha}")
    return pd.DataFrame(rows, columns=SCAN_COLUMNS)


def line_local_maxima(frame):
    """线扫描中高于左邻点且不低于右邻点的内部点"""
    ok = frame[frame["status"] == "optimal"].sort_values("p0").reset_index(drop=True)
    values = ok["access_info"].to_numpy()
    keep = [k for k in range(1, len(values) - 1) if values[k] > values[k - 1] and values[k] >= values[k + 1]]
    return ok.iloc[keep].reset_index(drop=True)


def shoulder_position(alpha, c, lo, hi, step, extra=None, jobs=1, frame=None):
    """
    对称线上离中心最远的局部极大值位置 p0

    先用 symmetric_line_scan 在 [lo, hi] 上按 step 找离散局部极大，再在
    相邻两个格点之间用有界 Brent 细化。没有局部极大时返回 nan。

    Args:
        frame: 已有的线扫描结果 (例如来自缓存)，为 None 时重新计算
    Returns:
        (p0, 线扫描 DataFrame)
    """
    if frame is None:
        frame = symmetric_line_scan(alpha, c, np.arange(lo, hi + 0.5 * step, step), extra, jobs)
    maxima = line_local_maxima(frame)
    if maxima.empty:
        logger.warning(f"no shoulder maximum on the symmetric line at alpha={alpha}")
        return math.nan, frame
    p0 = float(maxima["p0"].min())
    ensemble = lifted_trines(alpha)

    def negative_info(x):
        priors = symmetric_priors(x)
        return -refined_accessible_info(ensemble, priors, c, None if extra is None else extra(priors)).value

    res = minimize_scalar(negative_info, bounds=(p0 - step, p0 + step), method="bounded",
                          options={"xatol": LINE_XATOL})
    logger.info(f"shoulder at alpha={alpha}: grid p0={p0:.4f}, refined p0={res.x:.5f}")
    return float(res.x), frame
