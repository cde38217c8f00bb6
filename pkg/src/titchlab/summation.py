"""Deterministic reductions.

All heavy sums in this package go through deterministic_sum / deterministic_dot:
the array is cut into fixed-size blocks, each block is reduced by numpy's
pairwise summation, and the per-block partials are merged in block order with
Neumaier compensation.  The result is bit-identical for any thread count,
because threads only compute block partials; the merge order never changes.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 1 << 16


def neumaier_sum(values) -> float:
    """Compensated sum of a python iterable of floats."""
    s = 0.0
    comp = 0.0
    for v in values:
        t = s + v
        if abs(s) >= abs(v):
            comp += (s - t) + v
        else:
            comp += (v - t) + s
        s = t
    return s + comp


def _block_partials(arr: np.ndarray, threads: int) -> list:
    nblocks = (len(arr) + BLOCK - 1) // BLOCK
    if nblocks == 0:
        return []

    def one(i):
        return float(np.sum(arr[i * BLOCK:(i + 1) * BLOCK]))

    if threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(one, range(nblocks)))
    return [one(i) for i in range(nblocks)]


def deterministic_sum(arr, threads: int = 1) -> float:
    """Blockwise compensated sum of a float array, thread-count independent."""
    arr = np.asarray(arr, dtype=np.float64)
    return neumaier_sum(_block_partials(arr, threads))


def deterministic_dot(a, b, threads: int = 1) -> float:
    """Blockwise compensated sum of a*b (elementwise), deterministic."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("shape mismatch in deterministic_dot")
    nblocks = (len(a) + BLOCK - 1) // BLOCK

    def one(i):
        sl = slice(i * BLOCK, (i + 1) * BLOCK)
        return float(np.sum(a[sl] * b[sl]))

    if threads > 1 and nblocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            partials = list(ex.map(one, range(nblocks)))
    else:
        partials = [one(i) for i in range(nblocks)]
    return neumaier_sum(partials)


def deterministic_complex_sum(arr, threads: int = 1) -> complex:
    """Blockwise compensated sum of a complex array (real/imag separately)."""
    arr = np.asarray(arr, dtype=np.complex128)
    return complex(deterministic_sum(arr.real, threads),
                   deterministic_sum(arr.imag, threads))
