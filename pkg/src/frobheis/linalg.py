"""Tiny exact linear algebra over Fraction (row-major lists of lists).

Dimensions here are small (algebra dims <= ~20, hom spaces <= a few
hundred), so plain Gaussian elimination is all we need.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Tuple

Matrix = List[List[Fraction]]


def _clone(m: Matrix) -> Matrix:
    return [row[:] for row in m]


def rref(m: Matrix) -> Tuple[Matrix, List[int]]:
    """Reduced row echelon form and pivot column indices."""
    m = _clone(m)
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(cols):
        pr = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        pv = m[r][c]
        m[r] = [v / pv for v in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rank(m: Matrix) -> int:
    if not m:
        return 0
    return len(rref(m)[1])


def is_invertible(m: Matrix) -> bool:
    n = len(m)
    return n == 0 or (len(m[0]) == n and rank(m) == n)


def solve(m: Matrix, rhs: List[Fraction]) -> Optional[List[Fraction]]:
    """One solution of m @ x = rhs, or None if inconsistent."""
    rows = len(m)
    cols = len(m[0]) if rows else 0
    aug = [m[i][:] + [Fraction(rhs[i])] for i in range(rows)]
    red, pivots = rref(aug)
    if cols in pivots:
        return None
    x = [Fraction(0)] * cols
    for r, c in enumerate(pivots):
        x[c] = red[r][cols]
    return x


def nullspace(m: Matrix) -> List[List[Fraction]]:
    """Basis of the right kernel of m."""
    rows = len(m)
    cols = len(m[0]) if rows else 0
    if rows == 0:
        return [[Fraction(int(i == j)) for j in range(cols)] for i in range(cols)]
    red, pivots = rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * cols
        v[fc] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -red[r][fc]
        basis.append(v)
    return basis


def invert(m: Matrix) -> Optional[Matrix]:
    n = len(m)
    aug = [m[i][:] + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    red, pivots = rref(aug)
    if pivots != list(range(n)):
        return None
    return [row[n:] for row in red]


def row_space_basis(m: Matrix) -> List[List[Fraction]]:
    """Subset-free basis of the row space (rows of the rref)."""
    red, pivots = rref(m)
    return [red[i] for i in range(len(pivots))]


def in_row_space(m: Matrix, v: List[Fraction]) -> bool:
    if all(x == 0 for x in v):
        return True
    return rank(m + [list(v)]) == rank(m)
