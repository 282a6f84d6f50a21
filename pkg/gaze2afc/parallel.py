"""
parallel.py

Order-preserving map over independent jobs (participants, sub-models,
sampler chains).
"""

import logging
import typing
from multiprocessing import Pool, current_process

logger = logging.getLogger(__name__)

T = typing.TypeVar("T")
R = typing.TypeVar("R")


def parallel_map(
    func: typing.Callable[[T], R], items: typing.Iterable[T], workers: int = 1
) -> list[R]:
    """Apply `func` to every item, in a process pool when `workers > 1`.

    Results come back in input order whatever the number of workers.
    `func` must be a module-level function so it can be pickled. Inside a
    pool worker the map runs serially, as pool workers cannot fork.
    """

    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    if current_process().daemon:
        logger.debug("Already in a pool worker, mapping %d jobs serially", len(items))
        return [func(item) for item in items]
    n_process = min(workers, len(items))
    logger.debug("Mapping %d jobs over %d processes", len(items), n_process)
    with Pool(n_process) as pool:
        return pool.map(func, items)
