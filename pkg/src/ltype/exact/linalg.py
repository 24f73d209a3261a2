"""Exact linear algebra over the integers and the rationals.

Matrices are lists (or tuples) of rows.  Entries may be ``int`` or
``Fraction``; results are ``Fraction`` unless stated otherwise.  Nothing in
here ever touches floating point.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

Matrix = Sequence[Sequence]


def lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b if a and b else abs(a or b)


def content(vec: Sequence[int]) -> int:
    g = 0
    for x in vec:
        g = gcd(g, x)
    return g


def primitive(vec: Sequence) -> tuple[int, ...]:
    """Scale a rational vector to the primitive integer vector on the same ray."""
    den = 1
    for x in vec:
        if isinstance(x, Fraction):
            den = lcm(den, x.denominator)
    ints = [int(x * den) for x in vec]
    g = content(ints)
    if g == 0:
        return tuple(ints)
    return tuple(x // g for x in ints)


def sign_normalized(vec: Sequence[int]) -> tuple[int, ...]:
    """Primitive vector whose first nonzero entry is positive."""
    v = primitive(vec)
    for x in v:
        if x:
            return v if x > 0 else tuple(-y for y in v)
    return v


def integer_rows(M: Matrix) -> list[list[int]]:
    """Scale every row of a rational matrix to integers (row space is kept)."""
    out = []
    for row in M:
        den = 1
        for x in row:
            if isinstance(x, Fraction):
                den = lcm(den, x.denominator)
        out.append([int(x * den) for x in row])
    return out


def rank(M: Matrix) -> int:
    """Rank by fraction-free (Bareiss) elimination."""
    A = integer_rows(M)
    if not A:
        return 0
    nrows, ncols = len(A), len(A[0])
    r = 0
    prev = 1
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][c]
        for i in range(r + 1, nrows):
            a = A[i][c]
            row_i, row_r = A[i], A[r]
            A[i] = [(p * row_i[j] - a * row_r[j]) // prev for j in range(ncols)]
        prev = p
        r += 1
        if r == nrows:
            break
    return r


def det(M: Matrix):
    """Determinant, exact.  Integer input gives an ``int``."""
    n = len(M)
    if n == 0:
        return 1
    den = 1
    for row in M:
        for x in row:
            if isinstance(x, Fraction):
                den = lcm(den, x.denominator)
    A = [[int(x * den) for x in row] for row in M]
    sgn = 1
    prev = 1
    for k in range(n - 1):
        piv = next((i for i in range(k, n) if A[i][k]), None)
        if piv is None:
            return 0
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            sgn = -sgn
        p = A[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (p * A[i][j] - A[i][k] * A[k][j]) // prev
        prev = p
    value = sgn * A[n - 1][n - 1]
    if den == 1:
        return value
    return Fraction(value, den**n)


def rref(M: Matrix) -> tuple[list[list[Fraction]], list[int]]:
    A = [[Fraction(x) for x in row] for row in M]
    if not A:
        return A, []
    nrows, ncols = len(A), len(A[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][c]
        if p != 1:
            A[r] = [x / p for x in A[r]]
        for i in range(nrows):
            if i != r and A[i][c] != 0:
                a = A[i][c]
                A[i] = [x - a * y for x, y in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return A, pivots


def nullspace(M: Matrix, ncols: int | None = None) -> list[tuple[int, ...]]:
    """Basis of the right kernel as primitive integer vectors."""
    if not M:
        n = ncols or 0
        return [tuple(int(i == j) for j in range(n)) for i in range(n)]
    R, pivots = rref(M)
    n = len(R[0])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * n
        vec[f] = Fraction(1)
        for i, p in enumerate(pivots):
            vec[p] = -R[i][f]
        basis.append(primitive(vec))
    return basis


def solve(M: Matrix, b: Sequence) -> list[Fraction] | None:
    """One solution of ``M x = b`` or ``None`` when inconsistent."""
    aug = [list(row) + [rhs] for row, rhs in zip(M, b)]
    R, pivots = rref(aug)
    n = len(M[0])
    if n in pivots:
        return None
    x = [Fraction(0)] * n
    for i, p in enumerate(pivots):
        x[p] = R[i][n]
    return x


def inverse(M: Matrix) -> list[list[Fraction]]:
    n = len(M)
    aug = [list(row) + [int(i == j) for j in range(n)] for i, row in enumerate(M)]
    R, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in R[:n]]


def integer_inverse(M: Matrix) -> tuple[tuple[int, ...], ...]:
    """Inverse of a unimodular integer matrix."""
    inv = inverse(M)
    out = []
    for row in inv:
        if any(x.denominator != 1 for x in row):
            raise ValueError("matrix is not unimodular")
        out.append(tuple(int(x) for x in row))
    return tuple(out)


def matmul(A: Matrix, B: Matrix) -> list[list]:
    Bt = list(zip(*B))
    return [[sum(a * b for a, b in zip(row, col)) for col in Bt] for row in A]


def transpose(A: Matrix) -> list[list]:
    return [list(col) for col in zip(*A)]


def matvec(A: Matrix, v: Sequence) -> list:
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def dot(u: Sequence, v: Sequence):
    return sum(a * b for a, b in zip(u, v))


def identity(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def column_echelon(M: Matrix) -> tuple[list[list[int]], list[list[int]], int]:
    """Unimodular column reduction of an integer matrix.

    Returns ``(H, U, r)`` with ``M U = H``, ``U`` unimodular and the first
    ``r`` columns of ``H`` in echelon form, the remaining columns zero.  The
    last ``ncols - r`` columns of ``U`` are a basis of the integer kernel of
    ``M`` (the kernel saturated in ``Z^n``).
    """
    H = [list(map(int, row)) for row in M]
    nrows = len(H)
    ncols = len(H[0]) if H else 0
    U = [[int(i == j) for j in range(ncols)] for i in range(ncols)]

    def colop(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for mat in (H, U):
            for row in mat:
                x, y = row[i], row[j]
                row[i], row[j] = a * x + b * y, c * x + d * y

    r = 0
    for row in range(nrows):
        if r == ncols:
            break
        for j in range(r + 1, ncols):
            b = H[row][j]
            if b == 0:
                continue
            a = H[row][r]
            g, x, y = _xgcd(a, b)
            colop(r, j, x, y, -b // g, a // g)
        if H[row][r] != 0:
            if H[row][r] < 0:
                for mat in (H, U):
                    for line in mat:
                        line[r] = -line[r]
            r += 1
    return H, U, r
