"""Deterministic chunked work distribution.

Work is always cut into the same fixed-size chunks; the thread count only
changes who executes them, never the arithmetic.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 64


def chunks(n, size=CHUNK):
    return [np.arange(s, min(s + size, n)) for s in range(0, n, size)]


def parallel_map(fn, items, threads=1):
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
