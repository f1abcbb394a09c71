"""Bounded fan-out of independent Monte Carlo work items."""
from __future__ import annotations

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Hashable, Sequence, TypeVar

_LOGGER = logging.getLogger(__name__)

K = TypeVar("K", bound=Hashable)
R = TypeVar("R")


async def async_run_trials(
    func: Callable[[K], R],
    keys: Sequence[K],
    *,
    threads: int = 1,
    capture_errors: bool = False,
) -> dict[K, R | BaseException]:
    """Run ``func(key)`` for every key on a bounded thread pool.

    Args:
        func: Work item, called with its key.
        keys: Unique keys, usually index tuples.
        threads: Maximum number of items in flight.
        capture_errors: Return exceptions in the result map instead of raising.

    Returns:
        Mapping from key to result (or exception when ``capture_errors``).
    """
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    loop = asyncio.get_running_loop()
    semaphore = asyncio.Semaphore(threads)

    with ThreadPoolExecutor(max_workers=threads) as executor:

        async def _run(key: K) -> R:
            async with semaphore:
                return await loop.run_in_executor(executor, func, key)

        outcomes = await asyncio.gather(
            *(_run(key) for key in keys), return_exceptions=True
        )

    results: dict[K, R | BaseException] = {}
    for key, outcome in zip(keys, outcomes):
        if isinstance(outcome, BaseException):
            if not capture_errors:
                raise outcome
            _LOGGER.warning("Work item %s failed: %s", key, outcome)
        results[key] = outcome
    return results


def run_trials(
    func: Callable[[K], R], keys: Sequence[K], *, threads: int = 1
) -> list[R]:
    """Synchronous wrapper returning results in the order of ``keys``."""
    results = asyncio.run(async_run_trials(func, keys, threads=threads))
    return [results[key] for key in keys]  # type: ignore[misc]


def run_trials_capturing(
    func: Callable[[K], R], keys: Sequence[K], *, threads: int = 1
) -> dict[K, R | BaseException]:
    """Like :func:`run_trials` but failed items map to their exception."""
    return asyncio.run(
        async_run_trials(func, keys, threads=threads, capture_errors=True)
    )
