"""Thread-pool fan-out for independent tasks (grid points, CV folds, KS tests)."""

from typing import Callable, Iterable, List, TypeVar

from joblib import Parallel, delayed

T = TypeVar("T")
R = TypeVar("R")


def map_tasks(fn: Callable[[T], R], tasks: Iterable[T], threads: int = 1) -> List[R]:
    """
    Apply `fn` to every task, preserving task order in the result.

    Runs inline when threads == 1. Every task must own its state.
    """
    tasks = list(tasks)
    if threads <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    return Parallel(n_jobs=threads, prefer="threads")(delayed(fn)(task) for task in tasks)
