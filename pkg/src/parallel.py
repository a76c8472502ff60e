# src/parallel.py
import logging
from concurrent.futures import ProcessPoolExecutor

logger = logging.getLogger(__name__)


def run_cells(fn, cells, jobs=1):
    """
    Evaluates `fn` on every cell, optionally in worker processes.

    Results come back in input order whatever the schedule, so outputs written
    from them are identical for any `jobs`.
    """
    cells = list(cells)
    if jobs <= 1 or len(cells) <= 1:
        return [fn(cell) for cell in cells]
    workers = min(jobs, len(cells))
    logger.info("Running %d cells on %d workers", len(cells), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, cells))
