"""
Krein String Toolkit - Parallel Map
Order-preserving map over independent solves, capped by KREIN_THREADS.
"""

import logging
from multiprocessing import Pool
from typing import Callable, Iterable, List, Optional, TypeVar

from utils.constants import thread_count

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Iterable[T], processes: Optional[int] = None) -> List[R]:
    """
    Apply fn to every item, in order

    fn must be picklable (a module-level function or a functools.partial of one)
    when more than one process is used.

    Args:
        fn: Function of one argument
        items: Inputs
        processes: Worker count; defaults to KREIN_THREADS

    Returns:
        List of results in input order
    """
    items = list(items)
    processes = thread_count() if processes is None else max(1, processes)
    processes = min(processes, len(items))
    if processes <= 1:
        return [fn(item) for item in items]
    logger.debug("parallel map over %d items on %d processes", len(items), processes)
    chunk = max(1, len(items) // (4 * processes))
    with Pool(processes=processes) as pool:
        return pool.map(fn, items, chunksize=chunk)
