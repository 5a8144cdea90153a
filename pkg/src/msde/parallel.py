"""Row-block thread helper.

Workers receive disjoint ``(start, stop)`` row ranges and write into
preallocated output slices. Each row's result is a pure function of the
immutable inputs, so results are identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable


def row_blocks(n_rows: int, n_blocks: int) -> list[tuple[int, int]]:
    n_blocks = max(1, min(n_blocks, n_rows)) if n_rows else 1
    bounds = [round(i * n_rows / n_blocks) for i in range(n_blocks + 1)]
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def map_row_blocks(worker: Callable[[int, int], None], n_rows: int, threads: int) -> None:
    """Run ``worker(start, stop)`` over a partition of ``range(n_rows)``."""
    blocks = row_blocks(n_rows, threads)
    if threads <= 1 or len(blocks) <= 1:
        for start, stop in blocks:
            worker(start, stop)
        return
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        futures = [pool.submit(worker, start, stop) for start, stop in blocks]
        for f in futures:
            f.result()
