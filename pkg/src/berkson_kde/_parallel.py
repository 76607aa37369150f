"""Order-preserving thread pool helpers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Optional, TypeVar

from .errors import ConfigError

T = TypeVar("T")
R = TypeVar("R")

ENV_THREADS = "BERKSON_THREADS"


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit count, else ``$BERKSON_THREADS``, else the CPU count."""
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"{ENV_THREADS} must be an integer, got {env!r}") from None
        else:
            threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ConfigError("thread count must be >= 1")
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> list[R]:
    """``[fn(x) for x in items]`` evaluated on a pool; results keep input order."""
    items = list(items)
    k = min(resolve_threads(threads), max(1, len(items)))
    if k == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))
