"""Deterministic thread-parallel evaluation over path nodes."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import ParameterError

THREADS_ENV = "PHASE_MINMAX_THREADS"


def thread_count(default=1):
    """Worker count from PHASE_MINMAX_THREADS (1 when unset)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ParameterError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def map_rows(fn, rows, threads=None):
    """Apply ``fn`` to row blocks of a 2-D array and stack the results in order.

    Each row is processed independently, so the output does not depend on the
    number of threads.
    """
    threads = thread_count() if threads is None else threads
    rows = np.asarray(rows)
    if threads <= 1 or rows.shape[0] < 2:
        return fn(rows)
    blocks = np.array_split(rows, min(threads, rows.shape[0]))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, blocks))
    return np.concatenate(parts, axis=0)
