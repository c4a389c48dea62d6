"""Row-chunked evaluation of pairwise matrices over a thread pool.

numpy releases the GIL inside its kernels, so threads give real speedup for
the broadcasting distance computations; chunks are reassembled by index, so
the result never depends on scheduling.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

WORKERS_ENV = "HYPERDIM_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def chunked_rows(fn, n, *, workers=None, max_cells=4_000_000, width=None):
    """Stack fn(lo, hi) row blocks into an (n, width or n) matrix."""
    width = n if width is None else width
    workers = default_workers() if workers is None else max(1, int(workers))
    step = max(1, max_cells // max(1, width))
    bounds = [(lo, min(n, lo + step)) for lo in range(0, n, step)]
    if workers == 1 or len(bounds) == 1:
        blocks = [fn(lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda b: fn(*b), bounds))
    if not blocks:
        return np.zeros((0, width))
    return np.vstack(blocks)
