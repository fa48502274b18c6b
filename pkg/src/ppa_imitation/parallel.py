"""Order-preserving process pool.

Results always come back in input order, so anything reduced from them is
independent of the worker count.  ``PPA_IMITATION_WORKERS`` overrides the
worker count everywhere.
"""

from __future__ import annotations

import multiprocessing as mp
import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "PPA_IMITATION_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            workers = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    if workers is None:
        return 1
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    return workers


def ordered_map(fn, items, workers: int | None = None) -> list:
    items = list(items)
    n = resolve_workers(workers)
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else None
    with ProcessPoolExecutor(max_workers=min(n, len(items)), mp_context=ctx) as ex:
        return list(ex.map(fn, items, chunksize=1))


__all__ = ["WORKERS_ENV", "resolve_workers", "ordered_map"]
