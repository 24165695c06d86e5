import hashlib
import json
import os
import tempfile
import logging

logger = logging.getLogger(__name__)

CHUNK_SIZE = 4096


def get_file_hash(file_path):
    """
    计算文件的MD5哈希值 (文件不存在时返回 None)
    """
    if not os.path.exists(file_path):
        return None

    hasher = hashlib.md5()
    with open(file_path, 'rb') as f:
        # 分块读取
        for chunk in iter(lambda: f.read(CHUNK_SIZE), b""):
            hasher.update(chunk)
    return hasher.hexdigest()


def canonical_json(obj):
    """键排序的紧凑 JSON，浮点数保留 repr，哈希精确可复现"""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def content_hash(obj):
    """
    对任意可 JSON 序列化对象计算 MD5
    """
    data = canonical_json(obj).encode("utf-8")
    hasher = hashlib.md5()
    for start in range(0, len(data), CHUNK_SIZE):
        hasher.update(data[start:start + CHUNK_SIZE])
    return hasher.hexdigest()


def atomic_write_text(path, text):
    """
    先写临时文件再 os.replace，读者永远看不到写了一半的文件
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp_", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    return path
