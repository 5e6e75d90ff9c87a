"""Bounded worker pool whose results come back in task order."""

from concurrent.futures import ThreadPoolExecutor


def map_ordered(fn, items, threads=1):
    items = list(items)
    if threads is None or threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
