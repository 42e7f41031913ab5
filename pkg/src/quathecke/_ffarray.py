"""Vectorized finite-field kernels for large matrices.

PrimeField matrices become int64 arrays; Fp2 matrices become arrays with a
trailing axis of length 2 holding (s, t).  Only used when every
intermediate sum provably fits in int64.
"""

from __future__ import annotations

import numpy as np

from .fields import Fp2, Fp2Elem, PrimeField

MIN_SIZE = 24


def supported(F, n: int) -> bool:
    if n < MIN_SIZE or not isinstance(F, (PrimeField, Fp2)):
        return False
    eps = getattr(F, "eps", 0)
    return (n + 2) * F.p * F.p * (abs(eps) + 1) < 2**62


def is_fp2(F) -> bool:
    return isinstance(F, Fp2)


def to_array(F, M) -> np.ndarray:
    if is_fp2(F):
        return np.array([[(x[0], x[1]) for x in row] for row in M], dtype=np.int64).reshape(len(M), -1, 2)
    return np.array(M, dtype=np.int64).reshape(len(M), -1)


def from_array(F, A: np.ndarray) -> list[list]:
    if is_fp2(F):
        return [[Fp2Elem(int(s), int(t)) for s, t in row] for row in A.tolist()]
    return [[int(x) for x in row] for row in A.tolist()]


def zero_mask(F, A: np.ndarray) -> np.ndarray:
    if is_fp2(F):
        return (A[..., 0] == 0) & (A[..., 1] == 0)
    return A == 0


def emul(F, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Elementwise product with broadcasting."""
    p = F.p
    if is_fp2(F):
        s = (X[..., 0] * Y[..., 0] - F.eps * (X[..., 1] * Y[..., 1] % p)) % p
        t = (X[..., 0] * Y[..., 1] + X[..., 1] * Y[..., 0]) % p
        return np.stack([s, t], axis=-1)
    return X * Y % p


def scalar(F, x) -> np.ndarray:
    return np.array(tuple(x) if is_fp2(F) else x, dtype=np.int64)


def elem(F, a: np.ndarray):
    return Fp2Elem(int(a[0]), int(a[1])) if is_fp2(F) else int(a)


def matmul(F, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    p = F.p
    if is_fp2(F):
        s = (X[..., 0] @ Y[..., 0] - F.eps * (X[..., 1] @ Y[..., 1] % p)) % p
        t = (X[..., 0] @ Y[..., 1] + X[..., 1] @ Y[..., 0]) % p
        return np.stack([s, t], axis=-1)
    return X @ Y % p


def row_echelon(F, M) -> tuple[list[list], list[int]]:
    A = to_array(F, M)
    rows, cols = A.shape[0], A.shape[1]
    p = F.p
    pivots = []
    top = 0
    for c in range(cols):
        nz = np.flatnonzero(~zero_mask(F, A[top:, c]))
        if nz.size == 0:
            continue
        piv = top + int(nz[0])
        if piv != top:
            A[[top, piv]] = A[[piv, top]]
        inv = scalar(F, F.inv(elem(F, A[top, c])))
        A[top] = emul(F, A[top], inv)
        f = A[:, c].copy()
        f[top] = 0
        hit = np.flatnonzero(~zero_mask(F, f))
        if hit.size:
            A[hit] = (A[hit] - emul(F, f[hit][:, None], A[top][None, :])) % p
        pivots.append(c)
        top += 1
        if top == rows:
            break
    return from_array(F, A), pivots


def hessenberg(F, M) -> list[list]:
    A = to_array(F, M)
    n = A.shape[0]
    p = F.p
    for c in range(n - 2):
        nz = np.flatnonzero(~zero_mask(F, A[c + 1 :, c]))
        if nz.size == 0:
            continue
        piv = c + 1 + int(nz[0])
        if piv != c + 1:
            A[[piv, c + 1]] = A[[c + 1, piv]]
            A[:, [piv, c + 1]] = A[:, [c + 1, piv]]
        inv = scalar(F, F.inv(elem(F, A[c + 1, c])))
        f = emul(F, A[c + 2 :, c], inv)
        hit = np.flatnonzero(~zero_mask(F, f))
        if hit.size == 0:
            continue
        rows = c + 2 + hit
        fh = f[hit]
        A[rows] = (A[rows] - emul(F, fh[:, None], A[c + 1][None, :])) % p
        # column c+1 += sum_r f_r * column r
        add = matmul(F, A[:, rows], fh)
        A[:, c + 1] = (A[:, c + 1] + add) % p
    return from_array(F, A)


def dense_matmul(F, X, Y) -> list[list]:
    return from_array(F, matmul(F, to_array(F, X), to_array(F, Y)))
