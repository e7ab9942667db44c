"""Order-preserving map over worker processes."""

from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, workers=1, chunksize=None):
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    if chunksize is None:
        chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunksize))
