import asyncio
import logging

from tqdm import tqdm
from tqdm.asyncio import tqdm as async_tqdm

logger = logging.getLogger(__name__)


async def _gather_bounded(func, items, jobs, desc):
    sem = asyncio.Semaphore(jobs)

    async def worker(item):
        async with sem:
            return await asyncio.to_thread(func, item)

    tasks = [worker(item) for item in items]
    # gather keeps submission order, so results line up with items
    return await async_tqdm.gather(*tasks, desc=desc, leave=False)


def run_bounded(func, items, jobs=1, desc=None):
    """
    对每个 item 调用 func，最多 jobs 个并发线程，结果按输入顺序返回

    Args:
        func: 单参数函数
        items: 输入序列
        jobs: 并发上限 (1 表示顺序执行)
        desc: 进度条标题
    Returns:
        list，与 items 一一对应
    """
    items = list(items)
    jobs = max(1, int(jobs))
    if jobs == 1 or len(items) <= 1:
        return [func(item) for item in tqdm(items, desc=desc, leave=False, disable=len(items) <= 1)]
    logger.debug(f"running {len(items)} tasks on {jobs} workers")
    return asyncio.run(_gather_bounded(func, items, jobs, desc))
