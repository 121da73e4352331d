"""Deterministic helpers for running independent work items on threads."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .errors import ParameterError


def deterministic_map(fn, items, threads: int = 1) -> list:
    """Apply fn to items, returning results in item order.

    Work is distributed over threads but the output is positional, so the
    result is identical for every thread count.  Items must be independent
    and fn must not mutate shared state.
    """
    if threads < 1:
        raise ParameterError("threads must be at least 1")
    items = list(items)
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
