import logging
import multiprocessing
from typing import Callable, List, Sequence, TypeVar

from tqdm import tqdm

from sc_engine.settings import settings

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger(__name__)


def fan_out(fn: Callable[[T], R], payloads: Sequence[T], workers: int = 1, desc: str = "chunks") -> List[R]:
    """
    Map fn over payloads, in a process pool when workers > 1.

    Results come back in payload order whatever the worker count.
    """
    progress = dict(total=len(payloads), desc=desc, disable=not settings.SHOW_PROGRESS)
    if workers <= 1 or len(payloads) <= 1:
        return [fn(p) for p in tqdm(payloads, **progress)]
    logger.debug(f"fanning {len(payloads)} payloads out to {workers} processes")
    with multiprocessing.Pool(workers) as pool:
        return list(tqdm(pool.imap(fn, payloads), **progress))
