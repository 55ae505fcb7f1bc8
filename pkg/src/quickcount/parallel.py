"""Order-preserving map over replication indices."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def _run_chunk(fn, chunk):
    return [fn(i) for i in chunk]


def replicate_map(fn, indices, workers: int = 1) -> list:
    """``[fn(i) for i in indices]``, optionally spread over worker processes.

    ``fn`` must be picklable (a module-level function or a ``functools.partial``
    of one) when ``workers > 1``. The result order always follows ``indices``,
    so callers get identical output for any worker count.
    """
    indices = list(indices)
    if workers <= 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    size = -(-len(indices) // (workers * 4))
    chunks = [indices[k:k + size] for k in range(0, len(indices), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_run_chunk, [fn] * len(chunks), chunks)
        return [r for part in parts for r in part]
