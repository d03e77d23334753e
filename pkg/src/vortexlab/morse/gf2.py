"""Linear algebra over the field with two elements."""

from __future__ import annotations

import numpy as np


def as_gf2(M):
    M = np.asarray(M)
    if M.size and not np.issubdtype(M.dtype, np.integer) and not np.issubdtype(M.dtype, np.bool_):
        if not np.all(M == np.rint(M)):
            raise ValueError("matrix entries must be integers")
    return (np.asarray(M, dtype=np.int64) % 2).astype(np.uint8)


def row_reduce(M):
    """Reduced row echelon form over GF(2); returns (R, pivot columns)."""
    R = as_gf2(M).copy()
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        hits = np.nonzero(R[r:, c])[0]
        if len(hits) == 0:
            continue
        p = r + hits[0]
        if p != r:
            R[[r, p]] = R[[p, r]]
        others = np.nonzero(R[:, c])[0]
        others = others[others != r]
        R[others] ^= R[r]
        pivots.append(c)
        r += 1
    return R, pivots


def rank(M) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    return len(row_reduce(M)[1])


def matmul(A, B):
    return (as_gf2(A).astype(np.int64) @ as_gf2(B).astype(np.int64) % 2).astype(np.uint8)
