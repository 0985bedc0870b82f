from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from typing import List

import numpy as np

# elements per temporary (rows x inner x cols) in one reduction step
_TEMP_BUDGET = 1 << 21


def _blocks(n: int, block_rows: int) -> List[slice]:
    return [slice(r, min(r + block_rows, n)) for r in range(0, n, block_rows)]


def _minplus_rows(A: np.ndarray, B: np.ndarray, rows: slice, out: np.ndarray) -> None:
    m, p = B.shape
    a = A[rows]
    nr = a.shape[0]
    step = max(1, _TEMP_BUDGET // max(1, nr * p))
    acc = None
    # fixed k order; min is exact on integers, so the result does not depend on blocking
    for k0 in range(0, m, step):
        k1 = min(k0 + step, m)
        part = (a[:, k0:k1, None] + B[None, k0:k1, :]).min(axis=1)
        acc = part if acc is None else np.minimum(acc, part, out=acc)
    out[rows] = acc


def minplus(A: np.ndarray, B: np.ndarray, threads: int = 1, block_rows: int = 32) -> np.ndarray:
    """Tropical product C[i][j] = min_k A[i][k] + B[k][j] on int64 matrices.

    Row-blocked and data-parallel over output rows; bit-identical for any
    thread count.
    """
    A = np.ascontiguousarray(A, dtype=np.int64)
    B = np.ascontiguousarray(B, dtype=np.int64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[0]:
        raise ValueError(f"min-plus shape mismatch {A.shape} x {B.shape}")
    n, p = A.shape[0], B.shape[1]
    out = np.empty((n, p), dtype=np.int64)
    if n == 0 or p == 0:
        return out
    if A.shape[1] == 0:
        raise ValueError("min-plus over an empty inner index")
    blocks = _blocks(n, max(1, block_rows))
    if threads <= 1 or len(blocks) == 1:
        for rows in blocks:
            _minplus_rows(A, B, rows, out)
        return out
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda rows: _minplus_rows(A, B, rows, out), blocks))
    return out
