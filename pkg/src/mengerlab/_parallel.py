"""Order-preserving thread map used by every parallel reduction."""

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import BadParams


def resolve_threads(threads=None):
    """Thread count from the argument, ``MENGERLAB_THREADS`` or 1."""
    if threads is None:
        env = os.environ.get("MENGERLAB_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError as exc:
            raise BadParams(f"MENGERLAB_THREADS={env!r} is not an integer") from exc
    threads = int(threads)
    if threads < 1:
        raise BadParams("threads must be >= 1")
    return threads


def map_ordered(fn, jobs, threads=1):
    """``[fn(j) for j in jobs]``, optionally on a thread pool; order kept."""
    jobs = list(jobs)
    if threads == 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, jobs))
