"""
main.py - 三重态信道容量计算工具主程序

子命令：
    figure <id>        输出一张图的数据集
    scan --alpha a     线性规划可达信息的单纯形扫描
    simulate ...       抬升或投影级联的蒙特卡洛模拟
    acceptance         执行验收清单
    gamma1, gamma2     打印两个切点对应的抬升参数
"""

import os
import sys
import math
import logging
import argparse

from config import LOG_FILE, TOOL_NAME, TOOL_VERSION, ValidationError, config_hash, load_run_config
from src.exceptions import DomainError, TrineError, UsageError
from src.acceptance import all_passed, run_acceptance
from src.capacity_adaptive import (
    GAMMA2, adaptive_slope, find_gamma2, sim_report_frame, simulate_cascade, stage1_rate, stage2_rate, v_overlap,
)
from src.capacity_c11 import find_gamma1, gamma1_angle
from src.dataset_store import DatasetStore, write_dataset
from src.figures import FIGURE_IDS, build_figure, cached_scan
from src.lp_povm import find_local_maxima

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def setup_logging(verbose=False):
    """设置日志：文件 + 控制台"""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(LOG_FILE, encoding='utf-8'),
            logging.StreamHandler()
        ],
        force=True,
    )


def _add_common(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="key = value 配置文件")
    parser.add_argument("--out", default=default, help="输出目录")
    parser.add_argument("--paper-scale", dest="paper_scale", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="使用完整分辨率的网格 (耗时数小时)")
    parser.add_argument("--seed", type=int, default=default, help="随机种子")
    parser.add_argument("--jobs", type=int, default=default, help="并发上限")
    parser.add_argument("--verbose", "-v", action="store_true",
                        default=argparse.SUPPRESS if suppress else False, help="DEBUG 日志")


def build_parser():
    parser = argparse.ArgumentParser(prog=TOOL_NAME, description="抬升三重态的信息容量计算工具")
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("figure", help="生成一张图的数据集")
    p.add_argument("figure_id", help=f"one of: {', '.join(FIGURE_IDS)}")
    _add_common(p, suppress=True)

    p = sub.add_parser("scan", help="概率单纯形扫描")
    p.add_argument("--alpha", type=float, required=True)
    _add_common(p, suppress=True)

    p = sub.add_parser("simulate", help="蒙特卡洛模拟")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--gamma", type=float, default=GAMMA2)
    p.add_argument("--n", type=int, default=None, help="样本数")
    _add_common(p, suppress=True)

    for name, text in (("acceptance", "运行验收清单"), ("gamma1", "打印 gamma1"), ("gamma2", "打印 gamma2")):
        _add_common(sub.add_parser(name, help=text), suppress=True)
    return parser


def config_from_args(args):
    overrides = {
        "seed": args.seed,
        "jobs": args.jobs,
        "output_dir": args.out,
        "paper_scale": True if args.paper_scale else None,
        "simulate_n": getattr(args, "n", None),
    }
    return load_run_config(args.config, overrides)


def cmd_figure(args, cfg):
    if args.figure_id not in FIGURE_IDS:
        raise UsageError(f"unknown figure id {args.figure_id!r}; choose from {', '.join(FIGURE_IDS)}")
    store = DatasetStore(cfg.cache_dir)
    dataset = build_figure(args.figure_id, cfg, store)
    notes = dataset.notes + (f"content_hash: {dataset.content_id}",)
    path = write_dataset(os.path.join(cfg.output_dir, f"{args.figure_id}.csv"),
                         dataset.frame, cfg, dataset.units, notes)
    failed = 0
    if "status" in dataset.frame.columns:
        failed = int((~dataset.frame["status"].isin(["ok", "optimal"])).sum())
    if failed:
        logger.warning(f"{failed} rows of {args.figure_id} failed, see the status column")
    print(f"✓ 数据集已写出: {path} ({len(dataset.frame)} 行)")
    return EXIT_OK


def cmd_scan(args, cfg):
    if not 0.0 <= args.alpha <= 1.0:
        raise DomainError(f"alpha={args.alpha!r} outside [0,1]")
    store = DatasetStore(cfg.cache_dir)
    frame = cached_scan(args.alpha, cfg, store)
    maxima = find_local_maxima(frame, cfg.simplex_denominator)
    notes = [f"alpha = {args.alpha:g}, lattice denominator D = {cfg.simplex_denominator}"]
    notes.extend(f"local maximum at ({m.p0:.4f}, {m.p1:.4f}, {m.p2:.4f}) = {m.access_info:.6f}"
                 for m in maxima.itertuples(index=False))
    units = {"alpha": "probability", "p0": "probability", "p1": "probability", "p2": "probability",
             "access_info": "bits", "support_size": "count", "status": "text"}
    name = f"scan_alpha{args.alpha:g}_D{cfg.simplex_denominator}.csv"
    path = write_dataset(os.path.join(cfg.output_dir, name), frame, cfg, units, notes)
    print(f"✓ 扫描完成: {path}，发现 {len(maxima)} 个局部极大值")
    return EXIT_OK


def cmd_simulate(args, cfg):
    if not 0.0 < args.gamma < 1.0 or not 0.0 <= args.alpha <= args.gamma:
        raise UsageError(f"need 0 <= alpha <= gamma < 1, got alpha={args.alpha} gamma={args.gamma}")
    report = simulate_cascade(args.alpha, args.gamma, cfg.simulate_n, cfg.seed, jobs=cfg.jobs)
    frame = sim_report_frame(report)
    notes = (f"seed: {report.seed}", f"samples: {report.samples}",
             f"alpha = {report.alpha:g}, gamma = {report.gamma:g}",
             f"within 4 sigma: {report.within_sigma(4.0)}")
    units = {"branch": "text", "outcome": "text", "count": "count", "expected_prob": "probability"}
    name = f"simulate_alpha{args.alpha:g}_gamma{args.gamma:g}_seed{report.seed}.csv"
    path = write_dataset(os.path.join(cfg.output_dir, name), frame, cfg, units, notes)
    print(f"seed = {report.seed}")
    print(f"lift rate {report.empirical_lift_rate:.6f} (expected {report.expected_lift_rate:.6f})")
    print(f"✓ 模拟结果已写出: {path}")
    return EXIT_OK


def cmd_acceptance(args, cfg):
    report = run_acceptance(cfg)
    units = {"id": "text", "title": "text", "kind": "text", "expected": "value", "got": "value",
             "tol": "value", "status": "text", "seconds": "seconds"}
    path = write_dataset(os.path.join(cfg.output_dir, "acceptance_report.csv"), report, cfg, units)
    print(f"config_hash: {config_hash(cfg)}")
    for row in report.itertuples(index=False):
        mark = "✓" if row.status == "pass" else "✗"
        print(f"{mark} [{row.id:>3}] {row.title}: got {row.got:.8g} (expected {row.expected:.8g}) {row.status}")
    passed = all_passed(report)
    print(f"\n{(report['status'] == 'pass').sum()}/{len(report)} criteria passed, report: {path}")
    return EXIT_OK if passed else EXIT_FAILED


def cmd_gamma1(args, cfg):
    gamma1 = find_gamma1()
    angle = gamma1_angle()
    print(f"gamma1 = {gamma1:.6f}")
    print(f"angle  = {angle:.6f} rad ({math.degrees(angle):.4f} deg)")
    return EXIT_OK


def cmd_gamma2(args, cfg):
    gamma2 = find_gamma2()
    print(f"gamma2      = {gamma2:.6f}")
    print(f"v_overlap   = {v_overlap(gamma2):.5f}")
    print(f"stage1_rate = {stage1_rate(gamma2):.5f}")
    print(f"stage2_rate = {stage2_rate(gamma2):.5f}")
    print(f"slope       = {adaptive_slope(gamma2):.5f}")
    return EXIT_OK


COMMANDS = {
    "figure": cmd_figure,
    "scan": cmd_scan,
    "simulate": cmd_simulate,
    "acceptance": cmd_acceptance,
    "gamma1": cmd_gamma1,
    "gamma2": cmd_gamma2,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, DomainError, ValidationError, FileNotFoundError) as e:
        logger.error(f"usage error: {e}")
        print(f"\n错误: {e}")
        return EXIT_USAGE
    except TrineError as e:
        logger.exception(f"程序运行出错: {e}")
        print(f"\n错误: {e}")
        print(f"详细信息请查看日志文件: {LOG_FILE}")
        return EXIT_FAILED
    except KeyboardInterrupt:
        print("\n\n程序被用户中断")
        logger.info("程序被用户中断")
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
