"""Exact linear algebra over the rationals.

Matrices are lists of lists of Fraction.  Everything here is plain Gaussian
elimination with exact pivoting; sizes in this package stay small enough
that fraction growth is a non-issue.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .errors import PoleplaceError
from .ratpoly import as_rat

QMatrix = list[list[Fraction]]


def qmat(rows: Sequence[Sequence]) -> QMatrix:
    """Copy and coerce a nested sequence to an exact Fraction matrix."""
    return [[as_rat(x) for x in row] for row in rows]


def identity(n: int) -> QMatrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def zeros(rows: int, cols: int) -> QMatrix:
    return [[Fraction(0)] * cols for _ in range(rows)]


def transpose(A: Sequence[Sequence[Fraction]]) -> QMatrix:
    return [list(col) for col in zip(*A)] if A else []

def matmul(A: Sequence[Sequence[Fraction]], B: Sequence[Sequence[Fraction]]) -> QMatrix:
    if A and B and len(A[0]) != len(B):
        raise PoleplaceError(f"matmul shape mismatch: {len(A[0])} vs {len(B)}")
    Bt = transpose(B)
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def _eliminate(M: QMatrix) -> int:
    """In-place forward elimination; returns the rank."""
    n_rows = len(M)
    n_cols = len(M[0]) if n_rows else 0
    rank = 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if M[r][col] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        inv = 1 / M[rank][col]
        for r in range(rank + 1, n_rows):
            f = M[r][col] * inv
            if f:
                for c in range(col, n_cols):
                    M[r][c] -= f * M[rank][c]
        rank += 1
        if rank == n_rows:
            break
    return rank


def rank(A: Sequence[Sequence[Fraction]]) -> int:
    """Exact rank over the rationals."""
    if not A or not A[0]:
        return 0
    return _eliminate([list(row) for row in A])


def det(A: Sequence[Sequence[Fraction]]) -> Fraction:
    """Exact determinant of a square Fraction matrix."""
    n = len(A)
    if any(len(row) != n for row in A):
        raise PoleplaceError("determinant of a non-square matrix")
    if n == 0:
        return Fraction(1)
    M = [list(row) for row in A]
    result = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if M[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            M[col], M[pivot] = M[pivot], M[col]
            result = -result
        result *= M[col][col]
        inv = 1 / M[col][col]
        for r in range(col + 1, n):
            f = M[r][col] * inv
            if f:
                for c in range(col, n):
                    M[r][c] -= f * M[col][c]
    return result


def solve(A: Sequence[Sequence[Fraction]], B: Sequence[Sequence[Fraction]]) -> QMatrix:
    """Exact solution X of A X = B for square invertible A; B may have any width."""
    n = len(A)
    if any(len(row) != n for row in A):
        raise PoleplaceError("solve requires a square coefficient matrix")
    if len(B) != n:
        raise PoleplaceError("right-hand side height mismatch")
    width = len(B[0]) if n else 0
    M = [list(A[i]) + list(B[i]) for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if M[r][col] != 0), None)
        if pivot is None:
            raise PoleplaceError("singular matrix in exact solve")
        M[col], M[pivot] = M[pivot], M[col]
        inv = 1 / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col]:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [row[n : n + width] for row in M]


def inv(A: Sequence[Sequence[Fraction]]) -> QMatrix:
    """Exact inverse of a square invertible Fraction matrix."""
    return solve(A, identity(len(A)))


def is_invertible(A: Sequence[Sequence[Fraction]]) -> bool:
    n = len(A)
    return all(len(row) == n for row in A) and rank(A) == n
