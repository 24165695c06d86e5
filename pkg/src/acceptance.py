"""
acceptance - 数值验收清单

每个 criterion 计算一个量并与参考值比较。run_acceptance 每个 criterion 输出一行，
抛出异常的 criterion 记为 "error" 状态，不中断整个运行。
"""

import math
import time
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.exceptions import TrineError
from src.capacity_adaptive import (
    GAMMA2, adaptive_slope, best_protocol_rate, simulate_cascade, stage1_rate, stage2_rate, v_overlap,
)
from src.capacity_c11 import (
    best_beta_for_priors, c11_best_q_measurement, c11_curve, channel_parameters, equal_prior_accessible_info,
    find_gamma1, fixed_beta, max_vn_info, optimal_third_prior, p0_decay_scan, q_channel, theta_zero_alpha,
    trine_vn_info, two_trine_capacity,
)
from src.dataset_store import DatasetStore
from src.ensembles import lifted_trines, planar_trines, q_measurement
from src.figures import cached_scan
from src.info_measures import blahut_arimoto, holevo_capacity
from src.linalg_core import ProbDist
from src.lp_povm import (
    REFINE_COUNT, REFINE_PASSES, dual_certificate, find_local_maxima, find_third_tangency_prior, max_accessible_info,
    planar_grid, shoulder_position, sphere_grid, symmetric_line_scan,
)
from src.tree_bound import (
    adaptive_protocol_tree, collapse_deepest_refinement, concavity_audit, evaluate_tree,
    random_two_state_tree, two_state_ensemble,
)

logger = logging.getLogger(__name__)

KINDS = ("abs", "at_least", "at_most", "above", "true")
REPORT_COLUMNS = ["id", "title", "kind", "expected", "got", "tol", "status", "seconds"]

SIX_OUTCOME_ALPHA = 0.024831
BETA_STAR_ALPHAS = (0.045, 0.06, 0.09)
SEPARATION_WIDE = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06)
SEPARATION_NARROW = (0.07, 0.08)
PRIOR_ORACLE_ALPHAS = tuple(np.round(np.linspace(0.02, 0.11, 10), 3))
CONCAVITY_KAPPAS = (0.1, 0.25, 0.5, 0.9)
TREE_ALPHAS = (0.02, 0.05)
COLLAPSE_SEEDS = 200
SIMULATE_ALPHA = 0.05
DECAY_ALPHAS = (0.04, 0.02, 0.01, 0.005)
SHOULDER_P = 0.105
SHOULDER_ALPHA = 0.027
THIRD_TANGENCY_P = 0.065
# (lo, hi, step) for p0 on the symmetric line
SHOULDER_LINE = (0.04, 0.2, 0.005)


@dataclass(frozen=True)
class Criterion:
    """
    一项验收检查

    measure(cfg, store) 返回数值 (kind 为 "true" 时返回 bool)，kind 决定与 expected 的比较方式：
        abs       |got - expected| <= tol
        at_least  got >= expected
        at_most   got <= expected
        above     got > expected
        true      bool(got)
    """
    id: str
    title: str
    measure: object
    expected: float = math.nan
    tol: float = 0.0
    kind: str = "abs"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown criterion kind {self.kind!r}")

    def passes(self, got):
        if self.kind == "true":
            return bool(got)
        got = float(got)
        if math.isnan(got):
            return False
        if self.kind == "abs":
            return abs(got - self.expected) <= self.tol
        if self.kind == "at_least":
            return got >= self.expected
        if self.kind == "at_most":
            return got <= self.expected
        return got > self.expected


# --- measurements ---------------------------------------------------------

def _uniform_planar_lp(cfg, store):
    e = planar_trines()
    return max_accessible_info(e, e.priors, planar_grid(cfg.planar_grid_n)).value


def _six_outcome_gap(cfg, store):
    return equal_prior_accessible_info(SIX_OUTCOME_ALPHA)[0] - max_vn_info(SIX_OUTCOME_ALPHA)


def _six_outcome_lp_agreement(cfg, store):
    e = lifted_trines(SIX_OUTCOME_ALPHA)
    lp = max_accessible_info(e, e.priors, sphere_grid(cfg.sphere_grid_n)).value
    return abs(lp - equal_prior_accessible_info(SIX_OUTCOME_ALPHA)[0])


def _beta_star(cfg, store):
    betas = [c11_best_q_measurement(a).beta for a in BETA_STAR_ALPHAS]
    # the farthest from 2/3 decides
    return max(betas, key=lambda b: abs(b - 2.0 / 3.0))


def _chain_identity(cfg, store):
    return abs(stage1_rate(GAMMA2) + stage2_rate(GAMMA2) - trine_vn_info(GAMMA2, 0.0))


def _two_trine_slope(cfg, store, h=1e-7):
    return (two_trine_capacity(h) - two_trine_capacity(0.0)) / h


def _separation(alphas):
    def measure(cfg, store):
        curve = c11_curve(alphas, jobs=cfg.jobs)
        return min(best_protocol_rate(a).total - pt.value for a, pt in zip(alphas, curve))
    return measure


def _ordering(cfg, store):
    alphas = SEPARATION_WIDE + SEPARATION_NARROW
    curve = c11_curve(alphas, jobs=cfg.jobs)
    for a, pt in zip(alphas, curve):
        adaptive = best_protocol_rate(a).total
        if not pt.value <= adaptive + 1e-12 <= holevo_capacity(a) + 2e-12:
            logger.error(f"ordering fails at alpha={a}: c11={pt.value} adaptive={adaptive}")
            return False
    return True


def _prior_oracle(cfg, store):
    worst = 0.0
    for a in PRIOR_ORACLE_ALPHAS:
        for beta in (fixed_beta(a), 2.0 / 3.0):
            t = q_channel(a, beta)
            closed = optimal_third_prior(*channel_parameters(t))
            iterated = blahut_arimoto(t, tol=1e-14).optimal_priors[0]
            worst = max(worst, abs(closed - iterated))
    return worst


def _certificate(cfg, store):
    return dual_certificate(ProbDist([0.0, 0.5, 0.5]), planar_trines(), n=cfg.planar_grid_n)


def _tangency_error(cfg, store):
    cert = _certificate(cfg, store)
    if len(cert.tangencies) != 2:
        logger.error(f"expected two tangencies, got {cert.tangencies}")
        return math.inf
    return max(abs(t - target) for t, target in zip(sorted(cert.tangencies), (math.pi / 4, 3 * math.pi / 4)))


def _offset_vs_lp(cfg, store):
    cert = _certificate(cfg, store)
    return abs(2.0 * cert.offset - cert.lp_value)


def _concavity(cfg, store):
    return all(concavity_audit(k, 10_000).passed for k in CONCAVITY_KAPPAS)


def _planar_maxima(cfg, store):
    frame = cached_scan(0.0, cfg, store)
    return len(find_local_maxima(frame, cfg.simplex_denominator))


def _shoulder_p(cfg, store):
    """沿对称线的加密线搜索，候选集合补上该先验下最优的 Q(beta) 基。"""
    c = sphere_grid(cfg.scan_sphere_n)

    def q_vectors(priors):
        return q_measurement(best_beta_for_priors(SHOULDER_ALPHA, priors)).vectors

    lo, hi, step = SHOULDER_LINE
    params = {"alpha": SHOULDER_ALPHA, "line": SHOULDER_LINE, "grid_n": cfg.scan_sphere_n,
              "passes": REFINE_PASSES, "count": REFINE_COUNT}
    frame = store.get_or_compute(
        "symmetric_line", params,
        lambda: symmetric_line_scan(SHOULDER_ALPHA, c, np.arange(lo, hi + 0.5 * step, step), q_vectors, cfg.jobs))
    p0, _ = shoulder_position(SHOULDER_ALPHA, c, lo, hi, step, q_vectors, frame=frame)
    return p0


def _tree_vs_rate(cfg, store):
    worst = 0.0
    for a in TREE_ALPHAS:
        info = evaluate_tree(adaptive_protocol_tree(a, GAMMA2), lifted_trines(a)).total_info
        worst = max(worst, abs(info - best_protocol_rate(a).total))
    return worst


def _collapse_loss(cfg, store):
    """随机树集合上单步坍缩的最大信息损失"""
    worst = -math.inf
    for seed in range(COLLAPSE_SEEDS):
        rng = np.random.default_rng(seed)
        kappa = float(rng.uniform(0.05, 0.95))
        priors = rng.dirichlet([1.0, 1.0])
        ensemble = two_state_ensemble(kappa, priors)
        tree = random_two_state_tree(rng, ensemble)
        info = evaluate_tree(tree, ensemble).total_info
        while any(node.kind == "refinement" for _, node in tree.walk()):
            tree = collapse_deepest_refinement(tree, ensemble)
            collapsed = evaluate_tree(tree, ensemble).total_info
            worst = max(worst, info - collapsed)
            info = collapsed
    return worst


def _monte_carlo(cfg, store):
    report = simulate_cascade(SIMULATE_ALPHA, GAMMA2, cfg.simulate_n, cfg.seed, jobs=cfg.jobs)
    return report.within_sigma(4.0)


def _decay_frame(cfg):
    return p0_decay_scan(DECAY_ALPHAS, jobs=cfg.jobs)


def _decay_monotone(cfg, store):
    p0 = _decay_frame(cfg)["p0"].to_numpy()
    return bool(np.all(np.diff(p0) < 0.0))


def _decay_correlation(cfg, store):
    frame = _decay_frame(cfg)
    if not np.all(np.isfinite(frame["log2_p0"])):
        return math.nan
    return float(np.corrcoef(frame["log2_p0"], frame["inv_sqrt_alpha"])[0, 1])


CRITERIA = (
    Criterion("1", "two-trine planar capacity", lambda cfg, store: two_trine_capacity(0.0), 0.64542, 1e-5),
    Criterion("2", "uniform planar accessible information (LP)", _uniform_planar_lp, 0.58496, 1e-4),
    Criterion("3", "gamma1", lambda cfg, store: find_gamma1(), 0.061367, 5e-4),
    Criterion("4", "opt_theta reaches zero", lambda cfg, store: theta_zero_alpha(), 0.056651, 5e-4),
    Criterion("5", "six-outcome gap at 0.024831", _six_outcome_gap, 0.0038282, 1e-4),
    Criterion("6", "six-outcome POVM vs sphere LP", _six_outcome_lp_agreement, 5e-4, kind="at_most"),
    Criterion("7", "optimal beta is 2/3", _beta_star, 2.0 / 3.0, 1e-4),
    Criterion("8", "C11 at gamma2", lambda cfg, store: c11_best_q_measurement(GAMMA2).value, 1.03126, 1e-3),
    Criterion("9a", "V(0) overlap at gamma2", lambda cfg, store: v_overlap(GAMMA2), 0.90364, 1e-5),
    Criterion("9b", "stage-one rate", lambda cfg, store: stage1_rate(GAMMA2), 0.35453, 1e-4),
    Criterion("9c", "stage-two rate", lambda cfg, store: stage2_rate(GAMMA2), 0.67673, 1e-4),
    Criterion("9d", "chain rule residual", _chain_identity, 1e-12, kind="at_most"),
    Criterion("10", "adaptive slope", lambda cfg, store: adaptive_slope(GAMMA2), 4.42238, 1e-4),
    Criterion("11", "two-trine slope at zero", _two_trine_slope,
              0.5 * math.sqrt(3.0) * math.log2(2.0 + math.sqrt(3.0)), 1e-3),
    Criterion("12a", "adaptive minus C11 up to 0.06", _separation(SEPARATION_WIDE), 0.01, kind="at_least"),
    Criterion("12b", "adaptive minus C11 at 0.07, 0.08", _separation(SEPARATION_NARROW), 0.0, kind="above"),
    Criterion("12c", "C11 <= adaptive <= Holevo", _ordering, kind="true"),
    Criterion("13", "closed-form third prior vs Blahut-Arimoto", _prior_oracle, 1e-6, kind="at_most"),
    Criterion("14a", "dual sine tangencies at pi/4, 3pi/4", _tangency_error, 1e-3, kind="at_most"),
    Criterion("14b", "twice the sine offset equals the LP optimum", _offset_vs_lp, 1e-5, kind="at_most"),
    Criterion("14c", "prior where a third tangency appears", lambda cfg, store: find_third_tangency_prior(),
              THIRD_TANGENCY_P, 2e-3),
    Criterion("15", "F(x) >= 0 and two-state concavity", _concavity, kind="true"),
    Criterion("16a", "planar scan has four local maxima", _planar_maxima, 4, 0),
    Criterion("16b", "alpha=0.027 shoulder maxima position", _shoulder_p, SHOULDER_P, 1e-2),
    Criterion("17a", "adaptive tree equals protocol rate", _tree_vs_rate, 1e-6, kind="at_most"),
    Criterion("17b", "collapse never loses information", _collapse_loss, 1e-9, kind="at_most"),
    Criterion("18", "cascade frequencies within 4 sigma", _monte_carlo, kind="true"),
    Criterion("19a", "p0 decreases with alpha", _decay_monotone, kind="true"),
    Criterion("19b", "log2 p0 against 1/sqrt(alpha)", _decay_correlation, -0.99, kind="at_most"),
)


def run_acceptance(cfg, criteria=None, store=None):
    """
    执行验收清单

    Args:
        cfg: RunConfig
        criteria: 要执行的 Criterion 序列 (默认全部)
        store: DatasetStore，默认使用 cfg.cache_dir
    Returns:
        pandas.DataFrame，每个 criterion 一行
    """
    criteria = CRITERIA if criteria is None else criteria
    store = store or DatasetStore(cfg.cache_dir)
    rows = []
    for criterion in criteria:
        start = time.perf_counter()
        try:
            got = criterion.measure(cfg, store)
            status = "pass" if criterion.passes(got) else "fail"
        except (TrineError, ArithmeticError, ValueError) as exc:
            logger.error(f"criterion {criterion.id} raised: {exc}")
            got, status = math.nan, "error"
        seconds = time.perf_counter() - start
        got_value = float(got) if not isinstance(got, (bool, np.bool_)) else int(bool(got))
        rows.append({"id": criterion.id, "title": criterion.title, "kind": criterion.kind,
                     "expected": criterion.expected, "got": got_value, "tol": criterion.tol,
                     "status": status, "seconds": round(seconds, 3)})
        logger.info(f"criterion {criterion.id}: {status} (got {got_value!r}, {seconds:.1f}s)")
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def all_passed(report):
    return bool((report["status"] == "pass").all())
