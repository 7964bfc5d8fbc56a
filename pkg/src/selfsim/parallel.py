"""Order-preserving parallel map; results never depend on the worker count."""
from concurrent.futures import ThreadPoolExecutor


def pmap(fn, items, threads: int = 1):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))
