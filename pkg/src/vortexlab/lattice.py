"""Integer linear algebra: Smith normal form with unimodular transforms."""

from __future__ import annotations

import numpy as np


def smith_normal_form(M):
    """Return ``(U, D, V)`` with ``U @ M @ V == D`` and U, V unimodular.

    ``M`` is an integer matrix of shape (n, k).  ``D`` is diagonal with
    nonnegative entries, each dividing the next.  Plain Python integers are
    used internally, so entries never overflow.
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError("smith_normal_form expects a 2-d integer matrix")
    if not np.all(np.equal(np.mod(M, 1), 0)):
        raise ValueError("matrix entries must be integers")
    n, k = M.shape
    D = [[int(M[i, j]) for j in range(k)] for i in range(n)]
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    V = [[int(i == j) for j in range(k)] for i in range(k)]

    def swap_rows(a, b):
        D[a], D[b] = D[b], D[a]
        U[a], U[b] = U[b], U[a]

    def swap_cols(a, b):
        for row in D:
            row[a], row[b] = row[b], row[a]
        for row in V:
            row[a], row[b] = row[b], row[a]

    def add_row(src, dst, c):
        # row_dst += c * row_src
        D[dst] = [x + c * y for x, y in zip(D[dst], D[src])]
        U[dst] = [x + c * y for x, y in zip(U[dst], U[src])]

    def add_col(src, dst, c):
        for row in D:
            row[dst] += c * row[src]
        for row in V:
            row[dst] += c * row[src]

    for p in range(min(n, k)):
        while True:
            # smallest nonzero entry of the remaining block becomes the pivot
            best = None
            for i in range(p, n):
                for j in range(p, k):
                    if D[i][j] != 0 and (best is None or abs(D[i][j]) < abs(D[best[0]][best[1]])):
                        best = (i, j)
            if best is None:
                break
            swap_rows(p, best[0])
            swap_cols(p, best[1])
            piv = D[p][p]
            clean = True
            for i in range(p + 1, n):
                q = D[i][p] // piv
                if q:
                    add_row(p, i, -q)
                if D[i][p] != 0:
                    clean = False
            for j in range(p + 1, k):
                q = D[p][j] // piv
                if q:
                    add_col(p, j, -q)
                if D[p][j] != 0:
                    clean = False
            if not clean:
                continue
            # divisibility: pivot must divide the rest of the block
            bad = None
            for i in range(p + 1, n):
                for j in range(p + 1, k):
                    if D[i][j] % piv:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(bad, p, 1)
        if D[p][p] < 0:
            D[p] = [-x for x in D[p]]
            U[p] = [-x for x in U[p]]

    return (np.array(U, dtype=np.int64), np.array(D, dtype=np.int64),
            np.array(V, dtype=np.int64))


def integer_inverse(V):
    """Inverse of a unimodular integer matrix, exactly."""
    V = np.asarray(V, dtype=np.int64)
    inv = np.rint(np.linalg.inv(V)).astype(np.int64)
    if not np.array_equal(V @ inv, np.eye(V.shape[0], dtype=np.int64)):
        raise ValueError("matrix is not unimodular")
    return inv
