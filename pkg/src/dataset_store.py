"""
dataset_store - 数据集缓存与 CSV 输出

缓存条目是缓存目录下的 CSV 文件，文件名为 (操作, 参数, 工具版本) 的内容哈希。
输出的数据集在 CSV 正文前带一段 `#` 注释行：工具版本、配置哈希、单位和说明。
"""

import io
import os
import logging

import pandas as pd

from config import TOOL_NAME, TOOL_VERSION, config_hash
from src.exceptions import CacheCorruptionError
from src.utils import atomic_write_text, content_hash, get_file_hash

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"


def frame_to_csv(frame):
    """确定性的 CSV 正文：固定浮点格式，换行符为 '\\n'"""
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


class DatasetStore:
    """
    按内容哈希管理缓存
    """

    def __init__(self, cache_dir):
        self.cache_dir = cache_dir
        os.makedirs(cache_dir, exist_ok=True)

    def key(self, op, params):
        """操作及其参数在当前工具版本下的缓存键"""
        return content_hash({"op": op, "params": params, "version": TOOL_VERSION})

    def path(self, key):
        return os.path.join(self.cache_dir, f"{key}.csv")

    def _read(self, key):
        path = self.path(key)
        try:
            frame = pd.read_csv(path)
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
            raise CacheCorruptionError(f"cache entry {path} is unreadable: {exc}") from exc
        if frame.empty and os.path.getsize(path) == 0:
            raise CacheCorruptionError(f"cache entry {path} is empty")
        return frame

    def load(self, key):
        """
        读取缓存，不存在返回 None；损坏的条目会被删除并返回 None
        """
        path = self.path(key)
        if not os.path.exists(path):
            return None
        try:
            frame = self._read(key)
        except CacheCorruptionError as exc:
            logger.warning(f"{exc}; recomputing")
            os.remove(path)
            return None
        print(f"✓ Cache Hit: {key[:12]}")
        return frame

    def save(self, key, frame):
        atomic_write_text(self.path(key), frame_to_csv(frame))
        logger.info(f"cached {len(frame)} rows under {key[:12]} (md5 {get_file_hash(self.path(key))[:12]})")
        return self.path(key)

    def get_or_compute(self, op, params, compute):
        """命中缓存直接返回，否则计算后写入缓存再返回"""
        key = self.key(op, params)
        cached = self.load(key)
        if cached is not None:
            return cached
        frame = compute()
        self.save(key, frame)
        # reread so cached and fresh runs emit identical bytes
        return self._read(key)


def dataset_header(cfg, units, notes=()):
    """每个输出 CSV 之前的注释行"""
    lines = [
        f"# tool: {TOOL_NAME} {TOOL_VERSION}",
        f"# config_hash: {config_hash(cfg)}",
        "# units: " + ", ".join(f"{col}={unit}" for col, unit in units.items()),
    ]
    lines.extend(f"# note: {note}" for note in notes)
    return "\n".join(lines) + "\n"


def write_dataset(path, frame, cfg, units, notes=()):
    """
    写出带注释头的 CSV

    Args:
        path: 输出文件路径
        frame: pandas.DataFrame
        cfg: RunConfig
        units: {列名: 单位}
        notes: 额外的说明行
    """
    text = dataset_header(cfg, units, notes) + frame_to_csv(frame)
    atomic_write_text(path, text)
    logger.info(f"wrote {len(frame)} rows to {path}")
    return path


def read_dataset(path):
    """读取 write_dataset 写出的数据集，跳过注释头"""
    return pd.read_csv(path, comment="#")
