"""Deterministic fan-out of ensemble work over trajectory indices.

Work items are contiguous index chunks; every trajectory draws from its own
counter-based stream, so the merged result does not depend on the worker
count.  Workers are forked so that closures (target level functions,
compiled kernels) are inherited rather than pickled.
"""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

_JOB = None


def default_workers() -> int:
    env = os.environ.get("LOGLAW_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def _run_chunk(bounds):
    lo, hi = bounds
    return _JOB(np.arange(lo, hi))


def chunk_bounds(n: int, chunk: int):
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def map_trajectories(fn, n: int, workers: int | None = None, chunk: int | None = None) -> list:
    """Apply ``fn(ids)`` to consecutive chunks of range(n); results are
    returned in chunk order."""
    global _JOB
    workers = default_workers() if workers is None else max(1, int(workers))
    if chunk is None:
        chunk = max(1, -(-n // (4 * workers)))
    bounds = chunk_bounds(n, chunk)
    if workers == 1 or len(bounds) == 1 or "fork" not in mp.get_all_start_methods():
        return [fn(np.arange(lo, hi)) for lo, hi in bounds]
    _JOB = fn
    try:
        with ProcessPoolExecutor(max_workers=workers, mp_context=mp.get_context("fork")) as pool:
            return list(pool.map(_run_chunk, bounds))
    finally:
        _JOB = None
