"""Order-preserving map over a thread pool sized by NI_CERTIFY_THREADS."""

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "NI_CERTIFY_THREADS"


def thread_count():
    raw = os.environ.get(ENV_VAR, "1")
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}")
    return k


def pmap(fn, items, threads=None):
    """``list(map(fn, items))``, possibly in parallel; output order is input order."""
    items = list(items)
    k = thread_count() if threads is None else threads
    if k <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))
