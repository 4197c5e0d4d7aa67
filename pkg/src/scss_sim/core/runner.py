from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from tqdm import tqdm

from .config import cfg

T = TypeVar("T")
R = TypeVar("R")


class TaskRunner:
    """Standardized execution of independent numerical jobs.

    Results always come back in input order, whatever the worker count.
    """

    def map(
        self,
        fn: Callable[[T], R],
        items: Iterable[T],
        workers: Optional[int] = None,
        desc: Optional[str] = None,
    ) -> List[R]:
        """Apply a module-level callable to every item."""
        items = list(items)
        workers = cfg.workers if workers is None else workers
        # disable=None lets tqdm switch itself off on non-TTY output
        quiet = not cfg.show_progress or desc is None
        progress = tqdm(total=len(items), desc=desc, disable=True if quiet else None, leave=False)

        results: List[R] = []
        try:
            if workers <= 1 or len(items) <= 1:
                for item in items:
                    results.append(fn(item))
                    progress.update(1)
            else:
                with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
                    # Executor.map yields in submission order
                    for result in pool.map(fn, items):
                        results.append(result)
                        progress.update(1)
        finally:
            progress.close()
        return results


runner = TaskRunner()
