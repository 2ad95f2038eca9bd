"""Small exact linear algebra over the rationals, plus SVD rank."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

Matrix = list[list[Fraction]]


def to_fraction_matrix(M: Sequence[Sequence]) -> Matrix:
    return [[Fraction(v) for v in row] for row in M]


def rref(M: Sequence[Sequence]) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and pivot columns."""
    A = to_fraction_matrix(M)
    if not A:
        return [], []
    rows, cols = len(A), len(A[0])
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if A[i][c] != 0), None)
        if p is None:
            continue
        A[r], A[p] = A[p], A[r]
        inv = 1 / A[r][c]
        A[r] = [v * inv for v in A[r]]
        for i in range(rows):
            if i != r and A[i][c] != 0:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return A[:r], pivots


def rank(M: Sequence[Sequence]) -> int:
    return len(rref(M)[1])


def nullspace(M: Sequence[Sequence], ncols: int | None = None) -> Matrix:
    """Basis of {v : M v = 0}."""
    ncols = len(M[0]) if M else (ncols or 0)
    R, piv = rref(M) if M else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(R, piv):
            v[p] = -row[f]
        basis.append(v)
    return basis


def in_rowspan(v: Sequence, M: Sequence[Sequence]) -> bool:
    if not M:
        return all(x == 0 for x in v)
    return rank(list(M) + [list(v)]) == rank(M)


def transpose(M: Sequence[Sequence]) -> Matrix:
    return [list(col) for col in zip(*M)]


def matmul(A: Sequence[Sequence], B: Sequence[Sequence]) -> Matrix:
    Bt = transpose(B)
    return [[sum((a * b for a, b in zip(row, col)), Fraction(0)) for col in Bt] for row in A]


def matvec(A: Sequence[Sequence], v: Sequence) -> list:
    return [sum((a * b for a, b in zip(row, v)), Fraction(0) if _exact(v) else 0.0) for row in A]


def _exact(v) -> bool:
    return all(isinstance(x, (int, Fraction)) for x in v)


def identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def svd_rank(A: np.ndarray, rel: float = 1e-10) -> int:
    """Numerical rank with threshold ``rel * largest singular value``."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel * s[0]))
