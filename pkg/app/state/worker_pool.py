import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from app.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

_pool: Optional[ThreadPoolExecutor] = None
_pool_lock = threading.Lock()
_worker_flag = threading.local()


def worker_count() -> int:
    n = int(settings.threads)
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


def _mark_worker() -> None:
    _worker_flag.active = True


def get_worker_pool() -> ThreadPoolExecutor:
    global _pool
    if _pool is None:
        with _pool_lock:
            if _pool is None:
                n = worker_count()
                logger.debug("starting worker pool with %d threads", n)
                _pool = ThreadPoolExecutor(
                    max_workers=n,
                    thread_name_prefix="finsler-lab",
                    initializer=_mark_worker,
                )
    return _pool


def in_worker() -> bool:
    return bool(getattr(_worker_flag, "active", False))


def parallel_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    # results follow input order; nested calls from a worker run inline
    seq = list(items)
    if len(seq) <= 1 or worker_count() == 1 or in_worker():
        return [fn(x) for x in seq]
    return list(get_worker_pool().map(fn, seq))


def shutdown_worker_pool() -> None:
    global _pool
    with _pool_lock:
        if _pool is not None:
            _pool.shutdown(wait=True)
            _pool = None
