"""Worker-count policy shared by the parallel map helpers.

``MFNET_THREADS`` caps the number of threads used for independent pure
evaluations (finite-difference coordinates, consistency-curve seeds).
Results are always assembled in input order, so threading never changes
output values.
"""

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count():
    env = os.environ.get("MFNET_THREADS", "").strip()
    if env:
        try:
            n = int(env)
        except ValueError:
            n = 1
        return max(1, n)
    return max(1, os.cpu_count() or 1)


def ordered_map(fn, items, threads=None):
    """Map fn over items, preserving order; threads=1 runs inline."""
    n = thread_count() if threads is None else max(1, threads)
    items = list(items)
    if n == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
