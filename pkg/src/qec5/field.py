"""Arithmetic over the prime field Z_q and small linear algebra mod q."""
from __future__ import annotations

import numpy as np


class DimensionError(ValueError):
    """Raised for a non-prime or mismatched qudit dimension."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def check_dim(q: int) -> int:
    """Validate a qudit dimension and return it as a plain int."""
    if isinstance(q, bool) or int(q) != q or not is_prime(int(q)):
        raise DimensionError(f"dimension must be prime, got {q!r}")
    return int(q)


def mod_inverse(x: int, q: int) -> int:
    """Multiplicative inverse of ``x`` in Z_q.

    >>> mod_inverse(2, 5)
    3
    """
    x %= q
    if x == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {q}")
    return pow(x, -1, q)


def rref_mod(mat, q: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over Z_q.

    Returns the reduced matrix (zero rows dropped) and its pivot columns.
    """
    a = np.array(mat, dtype=np.int64) % q
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r] = (a[r] * mod_inverse(int(a[r, c]), q)) % q
        for i in range(rows):
            if i != r and a[i, c]:
                a[i] = (a[i] - a[i, c] * a[r]) % q
        pivots.append(c)
        r += 1
    return a[:r], pivots


def reduce_mod_rows(vecs, basis: np.ndarray, pivots: list[int], q: int) -> np.ndarray:
    """Reduce vectors (1-D or stacked rows) against an RREF basis.

    The result is zero exactly for vectors in the row space, and equal for
    vectors in the same coset, so it doubles as a canonical coset label.
    """
    v = np.array(vecs, dtype=np.int64) % q
    single = v.ndim == 1
    v = np.atleast_2d(v)
    for row, c in zip(basis, pivots):
        coef = v[:, c].copy()
        if coef.any():
            v = (v - np.outer(coef, row)) % q
    return v[0] if single else v


def in_row_space(vec, mat, q: int) -> bool:
    basis, pivots = rref_mod(mat, q)
    return not reduce_mod_rows(vec, basis, pivots, q).any()


def rank_mod(mat, q: int) -> int:
    return len(rref_mod(mat, q)[1])
