"""
Ordered process-pool mapping.

Work items are split into contiguous chunks and results are returned in
item order, so output never depends on the worker count or on scheduling.
With ``workers <= 1`` everything runs in-process.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, Tuple, TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def chunk_ranges(total: int, workers: int, min_chunk: int = 1) -> List[Tuple[int, int]]:
    """Split range(total) into contiguous (start, stop) chunks, a few per worker."""
    if total <= 0:
        return []
    target_chunks = max(1, workers * 4)
    size = max(min_chunk, -(-total // target_chunks))
    return [(start, min(start + size, total)) for start in range(0, total, size)]


def map_ordered(
    func: Callable[[T], R],
    items: Sequence[T],
    workers: int = 1,
    initializer: Optional[Callable[..., None]] = None,
    initargs: Tuple[Any, ...] = (),
) -> List[R]:
    if workers <= 1 or len(items) <= 1:
        if initializer is not None:
            initializer(*initargs)
        return [func(item) for item in items]

    logger.debug(f"Dispatching {len(items)} work items to {workers} workers")
    with ProcessPoolExecutor(max_workers=workers, initializer=initializer, initargs=initargs) as pool:
        return list(pool.map(func, items))
