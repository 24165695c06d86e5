"""
配置文件
"""

import os
import logging

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.exceptions import ConfigKeyError
from src.utils import content_hash

try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass

logger = logging.getLogger(__name__)

TOOL_NAME = "trine-capacity"
TOOL_VERSION = "1.0.0"

# 路径配置
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
CACHE_DIR = os.getenv("TRINE_CACHE_DIR", os.path.join(BASE_DIR, "data", "cache"))
DATASETS_DIR = os.getenv("TRINE_OUTPUT_DIR", os.path.join(BASE_DIR, "data", "datasets"))
LOG_FILE = os.path.join(BASE_DIR, "trine_capacity.log")

# 运行参数 (桌面规模)
DEFAULT_JOBS = int(os.getenv("TRINE_JOBS", "1"))
DEFAULT_SEED = int(os.getenv("TRINE_SEED", "20240601"))
PLANAR_GRID_N = 3600
SPHERE_GRID_N = 20000
SCAN_SPHERE_N = 4000
SIMPLEX_DENOMINATOR = 45
SIMULATE_N = 1_000_000

# 完整分辨率规模
PAPER_PLANAR_GRID_N = 36000
PAPER_SPHERE_GRID_N = 96000
PAPER_SIMPLEX_DENOMINATOR = 90

# 确保目录存在
for directory in [CACHE_DIR, DATASETS_DIR]:
    os.makedirs(directory, exist_ok=True)


class RunConfig(BaseModel):
    """一次命令运行的全部参数"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    planar_grid_n: int = Field(PLANAR_GRID_N, ge=4)
    sphere_grid_n: int = Field(SPHERE_GRID_N, ge=16)
    scan_sphere_n: int = Field(SCAN_SPHERE_N, ge=16)
    simplex_denominator: int = Field(SIMPLEX_DENOMINATOR, ge=6)
    simulate_n: int = Field(SIMULATE_N, ge=1)
    seed: int = DEFAULT_SEED
    jobs: int = Field(DEFAULT_JOBS, ge=1)
    cache_dir: str = CACHE_DIR
    output_dir: str = DATASETS_DIR
    paper_scale: bool = False

    def scaled(self):
        """完整规模的副本：网格与格点换成完整分辨率"""
        if not self.paper_scale:
            return self
        return self.model_copy(update={
            "planar_grid_n": PAPER_PLANAR_GRID_N,
            "sphere_grid_n": PAPER_SPHERE_GRID_N,
            "scan_sphere_n": PAPER_SPHERE_GRID_N,
            "simplex_denominator": PAPER_SIMPLEX_DENOMINATOR,
        })


NUMERIC_FIELDS = ("planar_grid_n", "sphere_grid_n", "scan_sphere_n", "simplex_denominator",
                  "simulate_n", "seed", "paper_scale")


def read_config_file(path):
    """
    读取 key = value 格式的配置文件 (与 .env 相同)

    Returns:
        dict，键名已校验
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    from dotenv import dotenv_values
    raw = dotenv_values(path)
    unknown = sorted(set(raw) - set(RunConfig.model_fields))
    if unknown:
        raise ConfigKeyError(f"unknown config keys: {', '.join(unknown)}")
    return {k: v for k, v in raw.items() if v is not None}


def load_run_config(config_path=None, overrides=None):
    """
    组装 RunConfig：命令行 > 配置文件 > 环境变量/默认值

    Args:
        config_path: 可选的配置文件路径
        overrides: 命令行给出的字段 (值为 None 的忽略)
    Raises:
        FileNotFoundError, ConfigKeyError, pydantic.ValidationError
    """
    values = {}
    if config_path:
        values.update(read_config_file(config_path))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**values)
    if cfg.paper_scale:
        logger.warning("paper scale requested: sphere LPs with 96000 candidates at D=90 take hours")
    cfg = cfg.scaled()
    for directory in (cfg.cache_dir, cfg.output_dir):
        os.makedirs(directory, exist_ok=True)
    return cfg


def config_hash(cfg):
    """数值字段的 MD5 (不含路径，跨机器稳定)"""
    return content_hash({name: getattr(cfg, name) for name in NUMERIC_FIELDS})


__all__ = ["RunConfig", "ValidationError", "load_run_config", "config_hash", "read_config_file",
           "TOOL_NAME", "TOOL_VERSION", "CACHE_DIR", "DATASETS_DIR", "LOG_FILE", "BASE_DIR"]
