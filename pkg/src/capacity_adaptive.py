"""
capacity_adaptive - 自适应两阶段协议的速率与蒙特卡洛验证

两个自适应协议 (简单的 D 测量协议与在 gamma_2 调好的抬升或投影协议) 的速率、
各阶段信道，以及带种子的单信号测量级联采样。
"""

import math
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from src.exceptions import ConvergenceError, DomainError
from src.ensembles import (
    apply_kraus, first_protocol_kraus, lift_or_project, pair_basis_povm, trine_vector, v_basis,
)
from src.capacity_c11 import LOG2_3, q_capacity, two_state_crossover, two_trine_capacity
from src.info_measures import TransitionMatrix, blahut_arimoto
from src.linalg_core import binary_entropy, entropy_bits
from src.runner import run_bounded

logger = logging.getLogger(__name__)

# chord tangency with the C11 curve, recomputable with find_gamma2()
GAMMA2 = 0.087247
BATCH_SIZE = 2 ** 18
PLANAR_CROSSOVER = two_state_crossover(0.0)


@dataclass(frozen=True)
class AdaptiveRates:
    alpha: float
    gamma: float
    tau1: float
    tau2: float
    total: float

    def __post_init__(self):
        if abs(self.total - (self.tau1 + self.tau2)) > 1e-12:
            raise DomainError(f"total {self.total!r} differs from tau1 + tau2")
        if self.total > LOG2_3 + 1e-12:
            raise DomainError(f"rate {self.total!r} exceeds log2 3")


@dataclass(frozen=True)
class SimReport:
    samples: int
    seed: int
    alpha: float
    gamma: float
    lift_counts: tuple
    lifted_counts: tuple
    planar_counts: tuple
    expected_lift_rate: float
    lifted_expected: tuple
    planar_expected: tuple

    @property
    def empirical_lift_rate(self):
        return self.lift_counts[0] / self.samples

    @staticmethod
    def _freqs(counts):
        total = sum(counts)
        return None if total == 0 else tuple(c / total for c in counts)

    @property
    def lifted_freqs(self):
        return self._freqs(self.lifted_counts)

    @property
    def planar_freqs(self):
        return self._freqs(self.planar_counts)

    @property
    def stage_channel_freqs(self):
        """抬升与投影两个分支的经验结果频率 (分支为空时为 None)"""
        return tuple(None if f is None else TransitionMatrix([f]) for f in (self.lifted_freqs, self.planar_freqs))

    @property
    def max_abs_deviation(self):
        devs = [abs(self.empirical_lift_rate - self.expected_lift_rate)]
        for freqs, expected in ((self.lifted_freqs, self.lifted_expected),
                                (self.planar_freqs, self.planar_expected)):
            if freqs is not None:
                devs.extend(abs(f - e) for f, e in zip(freqs, expected))
        return max(devs)

    def sigma(self, prob, branch_total):
        """由 branch_total 个样本估计的频率的二项标准差"""
        return math.sqrt(prob * (1.0 - prob) / branch_total) if branch_total else 0.0

    def within_sigma(self, k=4.0):
        """抬升比例与各分支频率都落在期望值 k sigma 以内时为 True"""
        checks = [(self.empirical_lift_rate, self.expected_lift_rate, self.samples)]
        for counts, expected in ((self.lifted_counts, self.lifted_expected),
                                 (self.planar_counts, self.planar_expected)):
            total = sum(counts)
            if total:
                checks.extend((c / total, e, total) for c, e in zip(counts, expected))
        return all(abs(f - e) <= k * self.sigma(e, n) + 1e-15 for f, e, n in checks)


def _check_gamma(gamma, upper=8.0 / 9.0):
    if not 0.0 < gamma < upper:
        raise DomainError(f"gamma={gamma!r} outside (0, {upper:.6g})")


def v_overlap(gamma):
    """<V_b(0)|T_b(gamma)>^2 = (sqrt(2(1-g)/3) + sqrt(g/3))^2."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma={gamma!r} outside [0,1]")
    return (math.sqrt(2.0 * (1.0 - gamma) / 3.0) + math.sqrt(gamma / 3.0)) ** 2


def stage1_rate_from_overlap(p):
    """log2 3 - H((1+p)/4, (1+p)/4, (1-p)/2)."""
    return LOG2_3 - float(entropy_bits([(1.0 + p) / 4.0, (1.0 + p) / 4.0, (1.0 - p) / 2.0]))


def stage2_rate_from_overlap(p):
    """(1+p)/2 (1 - H(2p/(1+p)))."""
    return 0.5 * (1.0 + p) * (1.0 - binary_entropy(2.0 * p / (1.0 + p)))


def stage1_rate(gamma):
    """得知抬升信号避开哪一对所获得的信息"""
    _check_gamma(gamma)
    return stage1_rate_from_overlap(v_overlap(gamma))


def stage2_rate(gamma):
    """第一阶段译出后，在对内区分所获得的信息"""
    _check_gamma(gamma)
    return stage2_rate_from_overlap(v_overlap(gamma))


def lifted_rate(gamma):
    return stage1_rate(gamma) + stage2_rate(gamma)


def simple_protocol_rate(alpha):
    """D 测量协议：0.64542 (1 - 3a) + log2(3) 3a"""
    if not 0.0 <= alpha <= 1.0 / 3.0:
        raise DomainError(f"alpha={alpha!r} outside [0, 1/3]")
    base = two_trine_capacity(0.0)
    tau1 = 3.0 * alpha * (LOG2_3 - 1.0)
    tau2 = base * (1.0 - 3.0 * alpha) + 3.0 * alpha
    return AdaptiveRates(alpha, 1.0 / 3.0, tau1, tau2, tau1 + tau2)


def best_protocol_rate(alpha, gamma=GAMMA2):
    """
    抬升或投影协议：以概率 alpha/gamma 信号变为 T(gamma)，用 V(0) 分两阶段读出；
    否则投影到平面，用两三重态码读出。
    """
    _check_gamma(gamma)
    if not 0.0 <= alpha <= gamma:
        raise DomainError(f"alpha={alpha!r} must lie in [0, gamma={gamma!r}]")
    lift = alpha / gamma
    tau1 = stage1_rate(gamma) * lift
    total = two_trine_capacity(0.0) * (1.0 - lift) + lifted_rate(gamma) * lift
    return AdaptiveRates(alpha, gamma, tau1, total - tau1, total)


def adaptive_slope(gamma=GAMMA2):
    """自适应直线 (0, 0.64542) -> (gamma, 抬升速率) 的斜率"""
    return (lifted_rate(gamma) - two_trine_capacity(0.0)) / gamma


def find_gamma2(lo=0.045, hi=0.2, h=1e-6):
    """
    gamma_2：从 (0, 两三重态容量) 出发的弦与 C11 曲线 beta = 2/3 分支的切点
    """
    base = two_trine_capacity(0.0)

    def curve(g):
        return q_capacity(g, 2.0 / 3.0)[0]

    def tangency(g):
        slope = (curve(g + h) - curve(g - h)) / (2.0 * h)
        return curve(g) - base - g * slope

    try:
        return brentq(tangency, lo, hi, xtol=1e-9)
    except ValueError as exc:
        raise ConvergenceError(f"gamma2 bracket [{lo}, {hi}] does not change sign") from exc


def first_protocol_channels(alpha):
    """
    D 测量协议的两个阶段信道

    第一阶段：输入 s 表示不在对中的三重态；每个 b != s 的结果概率为 3a/2，
    擦除 (平面) 的概率为 1 - 3a。
    第二阶段：输入是对中的两个成员；结果为 "identified 0"、"identified 1"、
    "planar guess 0"、"planar guess 1"。
    """
    if not 0.0 <= alpha <= 1.0 / 3.0:
        raise DomainError(f"alpha={alpha!r} outside [0, 1/3]")
    hit = 3.0 * alpha
    stage1 = np.zeros((3, 4))
    for s in range(3):
        for b in range(3):
            if b != s:
                stage1[s, b] = hit / 2.0
        stage1[s, 3] = 1.0 - hit
    q0 = PLANAR_CROSSOVER
    rest = 1.0 - hit
    stage2 = np.array([
        [hit, 0.0, rest * (1.0 - q0), rest * q0],
        [0.0, hit, rest * q0, rest * (1.0 - q0)],
    ])
    return TransitionMatrix(stage1), TransitionMatrix(stage2)


def first_protocol_rate(alpha):
    """由阶段信道算出的 D 测量协议速率"""
    kraus = first_protocol_kraus(alpha)
    identify = apply_kraus(kraus, trine_vector(alpha, 0))[0][0]
    if abs(identify - 3.0 * alpha) > 1e-9:
        logger.warning(f"identification probability {identify:.12f} differs from 3 alpha")
    stage1, stage2 = first_protocol_channels(alpha)
    tau1 = blahut_arimoto(stage1).capacity
    tau2 = blahut_arimoto(stage2).capacity
    return AdaptiveRates(alpha, 1.0 / 3.0, tau1, tau2, tau1 + tau2)


def _cascade_tables(alpha, gamma):
    """抬升概率，以及两个分支上每个输入的结果概率"""
    kraus = lift_or_project(alpha, gamma)
    outcomes = [apply_kraus(kraus, trine_vector(alpha, b)) for b in range(3)]
    p_proj, _ = outcomes[0][0]
    p_lift, _ = outcomes[0][1]
    lift_prob = p_lift / (p_lift + p_proj)

    v0 = v_basis(0.0).vectors
    lifted = np.zeros((3, 3))
    planar_correct = np.zeros((3, 3))
    planar_vectors = [np.append(trine_vector(0.0, b)[:2], 0.0) for b in range(3)]
    for b in range(3):
        lifted_state = outcomes[b][1][1]
        if lifted_state is not None:
            lifted[b] = (v0 @ lifted_state.coords) ** 2
        projected = outcomes[b][0][1]
        for s in range(3):
            if s == b or projected is None:
                continue
            first, second = (s + 1) % 3, (s + 2) % 3
            basis = pair_basis_povm(planar_vectors[first], planar_vectors[second]).vectors
            guess_index = 0 if b == first else 1
            planar_correct[s, b] = float((basis[guess_index] @ projected.coords) ** 2)
    return lift_prob, lifted, planar_correct


def _run_batch(task):
    seed_seq, size, lift_prob, lifted, planar_correct = task
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    s = rng.integers(0, 3, size=size)
    b = (s + 1 + rng.integers(0, 2, size=size)) % 3
    is_lifted = rng.random(size) < lift_prob
    u = rng.random(size)

    lift_counts = np.array([is_lifted.sum(), size - is_lifted.sum()])

    cum = np.cumsum(lifted, axis=1)
    lb, ls, lu = b[is_lifted], s[is_lifted], u[is_lifted]
    outcome = np.minimum((lu[:, None] >= cum[lb]).sum(axis=1), 2)
    relative = (outcome - ls) % 3
    # categories: first pair member, second pair member, excluded trine
    lifted_counts = np.array([(relative == 1).sum(), (relative == 2).sum(), (relative == 0).sum()])

    pb, ps, pu = b[~is_lifted], s[~is_lifted], u[~is_lifted]
    correct = pu < planar_correct[ps, pb]
    planar_counts = np.array([correct.sum(), correct.size - correct.sum()])
    return lift_counts, lifted_counts, planar_counts


def simulate_cascade(alpha, gamma, n, seed, jobs=1):
    """
    对单个信号采样抬升或投影级联

    第一阶段符号 s 均匀抽取，发送的三重态在 {s+1, s+2} 中均匀抽取。抬升结果服从
    Kraus 对的 Born 规则；抬升后的信号用 V(0) 测量，投影后的用平面三重态的配对基测量。
    每批 2^18 个样本使用由 SeedSequence(seed) 派生的独立 PCG64 流，计数与 `jobs` 无关。
    """
    _check_gamma(gamma, upper=1.0)
    if not 0.0 <= alpha <= gamma:
        raise DomainError(f"alpha={alpha!r} must lie in [0, gamma={gamma!r}]")
    if n < 1:
        raise DomainError(f"sample count must be positive, got {n}")
    lift_prob, lifted, planar_correct = _cascade_tables(alpha, gamma)
    n_batches = -(-n // BATCH_SIZE)
    children = np.random.SeedSequence(seed).spawn(n_batches)
    tasks = [(child, min(BATCH_SIZE, n - i * BATCH_SIZE), lift_prob, lifted, planar_correct)
             for i, child in enumerate(children)]
    results = run_bounded(_run_batch, tasks, jobs=jobs, desc="simulate")
    lift_counts = sum(r[0] for r in results)
    lifted_counts = sum(r[1] for r in results)
    planar_counts = sum(r[2] for r in results)

    p = v_overlap(gamma)
    q0 = PLANAR_CROSSOVER
    report = SimReport(
        samples=int(n), seed=int(seed), alpha=alpha, gamma=gamma,
        lift_counts=tuple(int(c) for c in lift_counts),
        lifted_counts=tuple(int(c) for c in lifted_counts),
        planar_counts=tuple(int(c) for c in planar_counts),
        expected_lift_rate=alpha / gamma,
        lifted_expected=((1.0 + p) / 4.0, (1.0 + p) / 4.0, (1.0 - p) / 2.0),
        planar_expected=(1.0 - q0, q0),
    )
    logger.info(f"cascade alpha={alpha} gamma={gamma} n={n} seed={seed}: "
                f"lift rate {report.empirical_lift_rate:.6f} (expected {alpha / gamma:.6f})")
    return report


def sim_report_frame(report):
    """SimReport 转成 branch, outcome, count, expected_prob 四列的表"""
    rows = []
    for branch, names, counts, expected in (
            ("lift", ("lifted", "projected"), report.lift_counts,
             (report.expected_lift_rate, 1.0 - report.expected_lift_rate)),
            ("lifted", ("pair_first", "pair_second", "excluded"), report.lifted_counts, report.lifted_expected),
            ("planar", ("correct", "wrong"), report.planar_counts, report.planar_expected)):
        for name, count, prob in zip(names, counts, expected):
            rows.append({"branch": branch, "outcome": name, "count": count, "expected_prob": prob})
    return pd.DataFrame(rows, columns=["branch", "outcome", "count", "expected_prob"])
