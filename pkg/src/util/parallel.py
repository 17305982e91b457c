"""
Process-wide worker pool for independent simulation batches.

The pool is created lazily and sized from ORTHANT_HJB_THREADS (default: all
cores). `ordered_map` returns results in submission order so aggregates do not
depend on scheduling.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()

T = TypeVar("T")
R = TypeVar("R")

# Global executor, created on first use
_executor: Optional[ThreadPoolExecutor] = None
_executor_threads: int = 0


def thread_count() -> int:
    """
    Worker count for the shared pool

    Environment Variables:
        ORTHANT_HJB_THREADS: Positive integer cap (default: os.cpu_count())
    """
    default = os.cpu_count() or 1
    raw = os.getenv("ORTHANT_HJB_THREADS")
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning(f"[PARALLEL] Ignoring non-integer ORTHANT_HJB_THREADS={raw!r}")
        return default
    if value < 1:
        logger.warning(f"[PARALLEL] Ignoring ORTHANT_HJB_THREADS={value}, using {default}")
        return default
    return value


def get_executor() -> ThreadPoolExecutor:
    """Get or create the shared thread pool"""
    global _executor, _executor_threads

    if _executor is None:
        _executor_threads = thread_count()
        _executor = ThreadPoolExecutor(max_workers=_executor_threads, thread_name_prefix="orthant")
        logger.debug(f"[PARALLEL] Thread pool created with {_executor_threads} workers")

    return _executor


def close_executor() -> None:
    """Shut the shared pool down; a later call to get_executor creates a fresh one"""
    global _executor

    if _executor is not None:
        _executor.shutdown(wait=True)
        _executor = None
        logger.debug("[PARALLEL] Thread pool closed")


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """Map over the pool, results in input order; runs inline for a single item"""
    items = list(items)
    if len(items) <= 1 or thread_count() == 1:
        return [fn(item) for item in items]
    return list(get_executor().map(fn, items))
