"""
Block-parallel execution with index-ordered reduction.

Work is cut into fixed-size blocks; block ``b`` owns random stream
``base + b``. Blocks run on a thread pool and their results come back in block
order, so the output depends on the block size but never on the thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Tuple, TypeVar

from ..core.errors import ConfigurationError
from ..core.logging import get_logger

logger = get_logger(__name__)

T = TypeVar("T")


def resolve_threads(threads: Optional[int]) -> int:
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise ConfigurationError(f"threads must be >= 1, got {threads}")
    return threads


def partition(n_items: int, block_size: int) -> List[Tuple[int, int]]:
    """Half-open ``(start, stop)`` ranges covering ``range(n_items)``."""
    if block_size < 1:
        raise ConfigurationError(f"block size must be >= 1, got {block_size}")
    return [(s, min(s + block_size, n_items)) for s in range(0, n_items, block_size)]


def run_blocks(
    task: Callable[[int, int, int], T],
    n_items: int,
    block_size: int,
    threads: Optional[int] = None,
) -> List[T]:
    """
    Run ``task(block_index, start, stop)`` over every block.

    Args:
        task: Work function for one block; must only touch its own stream
        n_items: Total number of paths or runs
        block_size: Items per block
        threads: Worker count (default: CPU count)

    Returns:
        Block results in block order
    """
    blocks = partition(n_items, block_size)
    workers = min(resolve_threads(threads), max(len(blocks), 1))
    logger.debug(f"running {len(blocks)} block(s) of <= {block_size} on {workers} thread(s)")

    if workers == 1:
        return [task(b, start, stop) for b, (start, stop) in enumerate(blocks)]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(task, b, start, stop) for b, (start, stop) in enumerate(blocks)
        ]
        return [f.result() for f in futures]
