"""Process-wide thread budget and an order-preserving parallel map."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_threads = max(1, min(8, os.cpu_count() or 1))


def set_threads(n: int) -> None:
    global _threads
    if n < 1:
        raise ValueError("thread count must be at least 1")
    _threads = int(n)


def get_threads() -> int:
    return _threads


def pmap(fn, items, threads: int | None = None) -> list:
    """``[fn(x) for x in items]`` evaluated on a thread pool; result order is the input order."""
    items = list(items)
    n = threads or _threads
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))


def chunks(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n))
    edges = [round(i * n / parts) for i in range(parts + 1)]
    return [(edges[i], edges[i + 1]) for i in range(parts) if edges[i + 1] > edges[i]]
