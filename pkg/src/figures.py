"""
figures - 各图对应的数据集

每个图编号对应一个函数，生成每条曲线一列的 pandas DataFrame，
同时给出各列单位和可选的说明行。计算失败的曲线点保留为状态不是 "ok" 的行。
"""

import math
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.exceptions import TrineError, UsageError
from src.capacity_adaptive import GAMMA2, best_protocol_rate, simple_protocol_rate
from src.capacity_c11 import (
    CONJECTURE_ALPHA, c11_best_q_measurement, c11_curve, c11_fixed_measurement, equal_prior_accessible_info,
    find_gamma1, max_vn_info, opt_theta, q_capacity, theta_zero_alpha, trine_vn_info, two_trine_capacity,
)
from src.info_measures import holevo_capacity
from src.lp_povm import find_local_maxima, planar_grid, simplex_scan, sphere_grid
from src.runner import run_bounded
from src.utils import content_hash

logger = logging.getLogger(__name__)

SCAN_FIGURES = {"planar3d": 0.0, "alpha009": 0.009, "alpha018": 0.018, "alpha027": 0.027}
FIGURE_IDS = ("opttheta", "manythetas", "accessible", "c1", "q1", "adapt-narrow", "adapt-wide",
              "planar3d", "alpha009", "alpha018", "alpha027")


@dataclass(frozen=True, eq=False)
class FigureDataset:
    figure_id: str
    frame: pd.DataFrame
    units: dict
    notes: tuple = ()

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise UsageError(f"unknown figure id {self.figure_id!r}")

    @property
    def content_id(self):
        """数据集取值的哈希，相同输入得到相同编号"""
        return content_hash(self.frame.to_csv(index=False, float_format="%.12g", lineterminator="\n"))


def _curve_rows(alphas, row_func, jobs, desc):
    """row_func(alpha) -> dict；失败的点写成 NaN 值加错误状态的行"""
    def safe(alpha):
        try:
            row = row_func(alpha)
            row["status"] = "ok"
        except TrineError as exc:
            logger.error(f"{desc} failed at alpha={alpha}: {exc}")
            row = {"status": f"error: {exc}"}
        row["alpha"] = alpha
        return row

    rows = run_bounded(safe, list(alphas), jobs=jobs, desc=desc)
    frame = pd.DataFrame(rows)
    cols = ["alpha"] + [c for c in frame.columns if c not in ("alpha", "status")] + ["status"]
    return frame[cols]


def _nan_unless(condition, func):
    return func() if condition else math.nan


def fig_opttheta(cfg):
    alphas = np.round(np.linspace(0.0, 0.07, 71), 6)
    frame = _curve_rows(alphas, lambda a: {"theta_opt": opt_theta(a)}, cfg.jobs, "opttheta")
    notes = (f"theta_opt reaches 0 at alpha = {theta_zero_alpha():.6f}",)
    return frame, {"alpha": "probability", "theta_opt": "radians"}, notes


def fig_manythetas(cfg):
    alphas = np.round(np.linspace(0.0, 0.07, 71), 6)
    degrees = list(range(0, 31, 3))

    def row(a):
        out = {f"theta_{d:02d}": trine_vn_info(a, math.radians(d)) for d in degrees}
        out["theta_opt"] = max_vn_info(a)
        return out

    frame = _curve_rows(alphas, row, cfg.jobs, "manythetas")
    units = {"alpha": "probability", **{f"theta_{d:02d}": "bits" for d in degrees}, "theta_opt": "bits"}
    return frame, units, ("column theta_DD is I_alpha(theta) at DD degrees",)


def fig_accessible(cfg):
    alphas = np.round(np.linspace(0.0, 0.1, 101), 6)
    frame = _curve_rows(alphas, lambda a: {
        "v_zero": trine_vn_info(a, 0.0),
        "v_opt": max_vn_info(a),
        "six_outcome": equal_prior_accessible_info(a)[0],
    }, cfg.jobs, "accessible")
    notes = (f"six_outcome is linear up to gamma1 = {find_gamma1():.6f}",)
    return frame, {"alpha": "probability", "v_zero": "bits", "v_opt": "bits", "six_outcome": "bits"}, notes


def _sym_line(alpha, gamma1, base, top):
    return base + (top - base) * alpha / gamma1 if alpha <= gamma1 else math.nan


def fig_c1(cfg):
    alphas = np.round(np.linspace(0.0, 0.1, 51), 6)
    gamma1 = find_gamma1()
    base, top = max_vn_info(0.0), trine_vn_info(gamma1, 0.0)
    frame = _curve_rows(alphas, lambda a: {
        "two_trine": two_trine_capacity(a),
        "fixed_meas": c11_fixed_measurement(a).value,
        "best_q": c11_best_q_measurement(a).value,
        "accessible_equal_priors": equal_prior_accessible_info(a)[0],
        "sym_line": _sym_line(a, gamma1, base, top),
    }, cfg.jobs, "c1")
    units = {"alpha": "probability", "two_trine": "bits", "fixed_meas": "bits", "best_q": "bits",
             "accessible_equal_priors": "bits", "sym_line": "bits"}
    notes = (f"values below alpha = {CONJECTURE_ALPHA} are conjectured optima",
             "sym_line is the six-outcome straight line and is empty past gamma1")
    return frame, units, notes


def fig_q1(cfg):
    alphas = np.round(np.linspace(0.0, 0.1, 51), 6)
    degrees = list(range(0, 51, 5))

    def row(a):
        out = {f"q_{d:02d}": q_capacity(a, math.sin(math.radians(d)) ** 2)[0] for d in degrees}
        out["q_two_thirds"] = q_capacity(a, 2.0 / 3.0)[0]
        out["envelope"] = c11_best_q_measurement(a).value
        return out

    frame = _curve_rows(alphas, row, cfg.jobs, "q1")
    units = {"alpha": "probability", **{f"q_{d:02d}": "bits" for d in degrees},
             "q_two_thirds": "bits", "envelope": "bits"}
    return frame, units, ("column q_DD uses the measurement Q(sin^2 of DD degrees)",)


def _adaptive_rows(alphas, cfg, wide):
    curve = c11_curve(alphas, jobs=cfg.jobs)

    def row(i):
        a = float(alphas[i])
        out = {
            "two_trine": _nan_unless(a <= 1.0 / 3.0, lambda: two_trine_capacity(a)),
            "fixed_meas": _nan_unless(a < 1.0 / 3.0, lambda: c11_fixed_measurement(a).value),
            "best_q": c11_best_q_measurement(a).value,
            "c11": curve[i].value,
            "adaptive_best": best_protocol_rate(a).total if a <= GAMMA2 else curve[i].value,
        }
        if wide:
            out["adaptive_simple"] = simple_protocol_rate(a).total
            out["holevo"] = holevo_capacity(a)
        return out

    frame = _curve_rows(range(len(alphas)), row, cfg.jobs, "adaptive")
    frame["alpha"] = alphas
    return frame


def fig_adapt_narrow(cfg):
    alphas = np.round(np.linspace(0.0, 0.1, 51), 6)
    frame = _adaptive_rows(alphas, cfg, wide=False)
    units = {"alpha": "probability", "two_trine": "bits", "fixed_meas": "bits", "best_q": "bits",
             "c11": "bits", "adaptive_best": "bits"}
    return frame, units, (f"adaptive_best follows the c11 curve past gamma2 = {GAMMA2}",)


def fig_adapt_wide(cfg):
    alphas = np.round(np.linspace(0.0, 1.0 / 3.0, 61), 9)
    frame = _adaptive_rows(alphas, cfg, wide=True)
    units = {"alpha": "probability", "two_trine": "bits", "fixed_meas": "bits", "best_q": "bits",
             "c11": "bits", "adaptive_best": "bits", "adaptive_simple": "bits", "holevo": "bits"}
    return frame, units, ("holevo is the Holevo capacity (uniform priors)",)


def scan_candidates(alpha, cfg):
    """平面三重态用平面网格，其余用螺旋球面网格"""
    if alpha == 0.0:
        return planar_grid(cfg.planar_grid_n), "planar", cfg.planar_grid_n
    return sphere_grid(cfg.scan_sphere_n), "sphere", cfg.scan_sphere_n


def cached_scan(alpha, cfg, store):
    """经数据集缓存执行 simplex_scan，键为 (alpha, D, 网格类型, 网格大小)"""
    candidates, kind, n = scan_candidates(alpha, cfg)
    params = {"alpha": alpha, "denominator": cfg.simplex_denominator, "grid": kind, "grid_n": n}
    return store.get_or_compute(
        "simplex_scan", params, lambda: simplex_scan(alpha, cfg.simplex_denominator, candidates, jobs=cfg.jobs))


def fig_scan(figure_id, cfg, store):
    alpha = SCAN_FIGURES[figure_id]
    frame = cached_scan(alpha, cfg, store)
    maxima = find_local_maxima(frame, cfg.simplex_denominator)
    notes = [f"lattice (a/D, b/D, c/D) with D = {cfg.simplex_denominator}",
             f"{len(maxima)} discrete local maxima"]
    notes.extend(f"local maximum at ({m.p0:.4f}, {m.p1:.4f}, {m.p2:.4f}) = {m.access_info:.6f}"
                 for m in maxima.itertuples(index=False))
    units = {"alpha": "probability", "p0": "probability", "p1": "probability", "p2": "probability",
             "access_info": "bits", "support_size": "count", "status": "text"}
    return frame, units, tuple(notes)


_BUILDERS = {
    "opttheta": fig_opttheta,
    "manythetas": fig_manythetas,
    "accessible": fig_accessible,
    "c1": fig_c1,
    "q1": fig_q1,
    "adapt-narrow": fig_adapt_narrow,
    "adapt-wide": fig_adapt_wide,
}


def build_figure(figure_id, cfg, store):
    """
    生成一张图的数据集

    Args:
        figure_id: FIGURE_IDS 之一
        cfg: RunConfig
        store: 扫描类图使用的 DatasetStore
    Returns:
        FigureDataset
    """
    if figure_id not in FIGURE_IDS:
        raise UsageError(f"unknown figure id {figure_id!r}; choose from {', '.join(FIGURE_IDS)}")
    if figure_id in SCAN_FIGURES:
        frame, units, notes = fig_scan(figure_id, cfg, store)
    else:
        frame, units, notes = _BUILDERS[figure_id](cfg)
    units = {**units, "status": "text"} if "status" in frame.columns else units
    return FigureDataset(figure_id, frame, units, tuple(notes))
