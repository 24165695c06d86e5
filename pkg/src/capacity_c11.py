"""
capacity_c11 - 单次测量容量 C_{1,1} 的三个猜测与等先验可达信息曲线

抬升三重态单次测量容量的三个逐步变好的下界 (两三重态码、Q(beta0) 测量加最优先验、
最优 Q(beta) 加最优先验)，等先验可达信息及其六结果凸包构造，以及图数据集所用的
曲线拼装。
"""

import math
import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import pandas as pd
from scipy.optimize import brentq, minimize_scalar
from scipy.special import expit

from src.exceptions import ConvergenceError, DomainError, SingularChannelError
from src.ensembles import lifted_trines, q_measurement, triple_povm, v_basis
from src.info_measures import induced_channel, mutual_information
from src.linalg_core import LN2, ProbDist, binary_entropy, entropy_bits
from src.runner import run_bounded

logger = logging.getLogger(__name__)

LOG2_3 = math.log2(3.0)
# below this lift the best-Q value is only conjectured optimal
CONJECTURE_ALPHA = 0.018073
BETA_GRID = 201
THETA_GRID = 361
XATOL = 1e-10
METHODS = ("two_trine", "fixed_measurement_opt_prior", "opt_measurement_opt_prior", "symmetric_povm")


@dataclass(frozen=True)
class C11Point:
    alpha: float
    value: float
    beta: float
    priors: ProbDist
    method: str
    conjectured: bool = field(default=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if not -1e-12 <= self.value <= LOG2_3 + 1e-12:
            raise DomainError(f"capacity value {self.value!r} outside [0, log2 3]")

    def as_row(self):
        return {"alpha": self.alpha, "method": self.method, "beta": self.beta,
                "p0": self.priors[0], "p1": self.priors[1], "p2": self.priors[2], "value": self.value}


def _check_alpha(alpha, upper=1.0, closed=True):
    ok = 0.0 <= alpha <= upper if closed else 0.0 <= alpha < upper
    if not ok:
        bracket = "]" if closed else ")"
        raise DomainError(f"alpha={alpha!r} outside [0, {upper:.6g}{bracket}")


def _symmetric_priors(p):
    return ProbDist([p, 0.5 * (1.0 - p), 0.5 * (1.0 - p)])


def two_state_crossover(alpha):
    """只区分 T_1, T_2 时的最优错误概率 1/2 - sqrt(3 (1-a)(1+3a)) / 4"""
    return 0.5 - 0.25 * math.sqrt(max(0.0, 3.0 * (1.0 - alpha) * (1.0 + 3.0 * alpha)))


def two_trine_capacity(alpha):
    """1 - H(q2(alpha))：只用三个三重态中的两个编码"""
    _check_alpha(alpha, 1.0 / 3.0)
    return 1.0 - binary_entropy(two_state_crossover(alpha))


def optimal_third_prior(q, delta, epsilon):
    """
    对称信道上 T_0 的最优先验 p

        T_0 -> (delta, (1-delta)/2, (1-delta)/2)
        T_1 -> (epsilon, 1-epsilon-q, q)
        T_2 -> (epsilon, q, 1-epsilon-q)

    先验为 (p, (1-p)/2, (1-p)/2)。令 dI/dp = 0 得

        Z = (1 - epsilon - H(epsilon, 1-epsilon-q, q) + H(delta)) / (delta - epsilon)
        p = (1/(1 + 2^Z) - epsilon) / (delta - epsilon)

    结果截断到 [0, 1]。

    Raises:
        SingularChannelError: delta == epsilon
    """
    for name, value in (("q", q), ("delta", delta), ("epsilon", epsilon)):
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"{name}={value!r} outside [0,1]")
    if q + epsilon > 1.0 + 1e-12:
        raise DomainError(f"q + epsilon = {q + epsilon!r} exceeds 1")
    spread = delta - epsilon
    if spread == 0.0:
        raise SingularChannelError(f"delta == epsilon == {delta!r}: the third trine is indistinguishable")
    row_entropy = float(entropy_bits([epsilon, max(0.0, 1.0 - epsilon - q), q]))
    z = (1.0 - epsilon - row_entropy + binary_entropy(delta)) / spread
    # 1/(1 + 2^z) without overflow
    r = float(expit(-z * LN2))
    return min(1.0, max(0.0, (r - epsilon) / spread))


def q_channel(alpha, beta):
    """用 Q(beta) 基测量抬升三重态得到的转移矩阵"""
    return induced_channel(lifted_trines(alpha), q_measurement(beta))


def channel_parameters(t):
    """从 Q(beta) 转移矩阵读出 (q, delta, epsilon)"""
    rows = t.rows
    return float(rows[1, 2]), float(rows[0, 0]), float(rows[1, 0])


def q_capacity(alpha, beta):
    """
    Q(beta) 信道在最优对称先验下的容量

    Returns:
        (bits, p0)
    """
    t = q_channel(alpha, beta)
    q, delta, epsilon = channel_parameters(t)
    if abs(delta - epsilon) < 1e-15:
        # mutual information is linear in p here
        ends = [(mutual_information(_symmetric_priors(p), t), p) for p in (0.0, 1.0)]
        value, p = max(ends, key=lambda pair: pair[0])
        return value, p
    p = optimal_third_prior(q, delta, epsilon)
    return mutual_information(_symmetric_priors(p), t), p


def fixed_beta(alpha):
    """beta0 = 4 alpha / (1 + 3 alpha)：此时 Q_0 与 T_1、T_2 正交"""
    return 4.0 * alpha / (1.0 + 3.0 * alpha)


def c11_fixed_measurement(alpha):
    """第二个猜测：Q(beta0) 测量加最优的第三个先验"""
    _check_alpha(alpha, 1.0 / 3.0, closed=False)
    beta = fixed_beta(alpha)
    t = q_channel(alpha, beta)
    q, delta, epsilon = channel_parameters(t)
    # epsilon vanishes analytically at beta0
    try:
        p = optimal_third_prior(q, delta, 0.0)
    except SingularChannelError:
        p = 0.0
    priors = _symmetric_priors(p)
    return C11Point(alpha, mutual_information(priors, t), beta, priors,
                    "fixed_measurement_opt_prior", alpha < CONJECTURE_ALPHA)


def _maximize_on_interval(func, lo, hi, n, extra=()):
    """
    网格搜索，再在最优格点附近做有界 Brent

    返回最大值点；`extra` 中的候选也参与比较，并列时取较小的自变量。
    """
    grid = np.linspace(lo, hi, n)
    values = np.array([func(x) for x in grid])
    k = int(np.argmax(values))
    left, right = grid[max(k - 1, 0)], grid[min(k + 1, n - 1)]
    candidates = [(values[k], grid[k])]
    if right > left:
        res = minimize_scalar(lambda x: -func(x), bounds=(left, right), method="bounded",
                              options={"xatol": XATOL})
        candidates.append((-float(res.fun), float(res.x)))
    for x in extra:
        if lo <= x <= hi:
            candidates.append((func(x), float(x)))
    best_value = max(v for v, _ in candidates)
    return min(x for v, x in candidates if v >= best_value - 1e-14)


def c11_best_q_measurement(alpha):
    """第三个猜测：在 beta in [0, 1] 上最大化 q_capacity"""
    _check_alpha(alpha, 1.0, closed=False)
    beta = _maximize_on_interval(lambda b: q_capacity(alpha, b)[0], 0.0, 1.0, BETA_GRID,
                                 extra=(fixed_beta(alpha), 2.0 / 3.0))
    value, p = q_capacity(alpha, beta)
    logger.debug(f"best Q at alpha={alpha}: beta={beta:.8f} value={value:.8f} p0={p:.3e}")
    return C11Point(alpha, value, beta, _symmetric_priors(p), "opt_measurement_opt_prior",
                    alpha < CONJECTURE_ALPHA)


def best_beta_for_priors(alpha, priors):
    """
    固定先验下使 Q(beta) 互信息最大的 beta

    Args:
        alpha: 抬升参数
        priors: 三个三重态的先验
    Returns:
        beta in [0, 1]
    """
    e = lifted_trines(alpha)
    priors = priors if isinstance(priors, ProbDist) else ProbDist(priors)
    return _maximize_on_interval(lambda b: mutual_information(priors, induced_channel(e, q_measurement(b))),
                                 0.0, 1.0, BETA_GRID, extra=(fixed_beta(alpha), 2.0 / 3.0))


def trine_vn_info(alpha, theta):
    """均匀先验下 V(theta) 在抬升三重态上的互信息 log2 3 - H(c_0, c_1, c_2)"""
    t = lifted_trines(alpha)
    c = (t.vectors @ v_basis(theta).vectors[0]) ** 2
    return LOG2_3 - float(entropy_bits(c))


def opt_theta(alpha):
    """
    trine_vn_info(alpha, theta) 关于 theta 的最大值点

    曲线以 2 pi/3 为周期且关于 theta 为偶函数，只需搜索 [0, pi/3]。
    theta = 0 最优时精确返回 0.0。
    """
    _check_alpha(alpha)
    return _maximize_on_interval(lambda th: trine_vn_info(alpha, th), 0.0, math.pi / 3.0, THETA_GRID,
                                 extra=(0.0,))


def max_vn_info(alpha):
    return trine_vn_info(alpha, opt_theta(alpha))


def _theta_curvature(alpha, h=1e-4):
    f0 = trine_vn_info(alpha, 0.0)
    return (trine_vn_info(alpha, h) - 2.0 * f0 + trine_vn_info(alpha, -h)) / (h * h)


@lru_cache(maxsize=1)
def theta_zero_alpha(lo=0.0, hi=0.07):
    """theta = 0 变成 trine_vn_info 极大值点的抬升参数 (曲率变号处)"""
    return brentq(_theta_curvature, lo, hi, xtol=1e-10)


def _vn_slope(alpha, h=1e-6):
    return (trine_vn_info(alpha + h, 0.0) - trine_vn_info(alpha - h, 0.0)) / (2.0 * h)


@lru_cache(maxsize=1)
def find_gamma1(lo=0.0567, hi=0.2):
    """
    gamma_1：从 (0, I(0)) 出发的弦与曲线 alpha -> max_theta I 的切点

    theta_zero_alpha 之后最优角为 0，切点条件 f(g) - I(0) = g f'(g) 在 theta = 0 分支上求解。
    """
    base = max_vn_info(0.0)

    def tangency(g):
        return trine_vn_info(g, 0.0) - base - g * _vn_slope(g)

    try:
        return brentq(tangency, lo, hi, xtol=1e-10)
    except ValueError as exc:
        raise ConvergenceError(f"gamma1 bracket [{lo}, {hi}] does not change sign") from exc


def gamma1_angle():
    """切点的抬升角 arcsin sqrt(gamma_1)"""
    return math.asin(math.sqrt(find_gamma1()))


def hull_povm(alpha, gamma):
    """
    六结果 POVM：先把 T(alpha) 抬升到 T(gamma) 再做 V(0)，与平面三元组 P_b(0, pi/6) 混合
    """
    if not 0.0 <= alpha <= gamma:
        raise DomainError(f"alpha={alpha!r} must lie in [0, gamma={gamma!r}]")
    # sin^2(phi) solving alpha_prime(alpha, phi) = gamma
    s2 = gamma * (1.0 - alpha) / (2.0 * alpha * (1.0 - gamma) + gamma * (1.0 - alpha))
    phi = math.asin(math.sqrt(s2))
    weight = 1.0 / (3.0 * s2)
    return triple_povm([(weight, phi, 0.0), (1.0 - weight, 0.0, math.pi / 6.0)])


def equal_prior_accessible_info(alpha):
    """
    均匀先验下抬升三重态的可达信息

    gamma_1 以上用最优 von Neumann 测量 V(theta*)；以下用实现两段凸包的六结果 POVM。

    Returns:
        (bits, Povm)
    """
    _check_alpha(alpha)
    e = lifted_trines(alpha)
    gamma1 = find_gamma1()
    if alpha >= gamma1:
        povm = v_basis(opt_theta(alpha))
    else:
        povm = hull_povm(alpha, gamma1)
    return mutual_information(e.priors, induced_channel(e, povm)), povm


def _curve_point(alpha):
    points = []
    if alpha <= 1.0 / 3.0:
        points.append(C11Point(alpha, two_trine_capacity(alpha), math.nan, _symmetric_priors(0.0),
                               "two_trine", alpha < CONJECTURE_ALPHA))
    if alpha < 1.0 / 3.0:
        points.append(c11_fixed_measurement(alpha))
    if alpha < 1.0:
        points.append(c11_best_q_measurement(alpha))
    value, _ = equal_prior_accessible_info(alpha)
    points.append(C11Point(alpha, value, math.nan, ProbDist.uniform(3), "symmetric_povm"))
    best = max(p.value for p in points)
    # earliest method within rounding of the best wins the label
    return next(p for p in points if p.value >= best - 1e-12)


def c11_curve(alphas, jobs=1):
    """各容量猜测的逐点最大值，并标注取得最大值的方法"""
    return run_bounded(_curve_point, list(alphas), jobs=jobs, desc="C11 curve")


def p0_decay_scan(alphas, jobs=1):
    """
    最优 Q(beta) 测量下第三个三重态的最优先验

    Returns:
        DataFrame with alpha, beta, p0, log2_p0, inv_sqrt_alpha
    """
    points = run_bounded(c11_best_q_measurement, list(alphas), jobs=jobs, desc="p0 decay")
    rows = []
    for pt in points:
        p0 = pt.priors[0]
        rows.append({"alpha": pt.alpha, "beta": pt.beta, "p0": p0,
                     "log2_p0": math.log2(p0) if p0 > 0.0 else -math.inf,
                     "inv_sqrt_alpha": 1.0 / math.sqrt(pt.alpha) if pt.alpha > 0.0 else math.inf})
    return pd.DataFrame(rows, columns=["alpha", "beta", "p0", "log2_p0", "inv_sqrt_alpha"])
