"""Exact two-phase simplex with Bland's rule."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..exact.linalg import primitive

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class LPResult:
    status: str
    value: Fraction | None = None
    x: tuple[Fraction, ...] | None = None
    ray: tuple[int, ...] | None = None


def _pivot(T: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    row = T[r]
    p = row[c]
    if p != 1:
        row = T[r] = [x / p for x in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[c]
            if f:
                T[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


def _simplex(T: list[list[Fraction]], basis: list[int], allowed: int) -> int | None:
    """Maximize the objective in the last row of ``T`` (stored negated).

    Columns ``>= allowed`` never enter.  Returns ``None`` at optimality or the
    entering column of an unbounded direction.
    """
    m = len(T) - 1
    obj = T[m]
    while True:
        obj = T[m]
        enter = next((j for j in range(allowed) if obj[j] < 0), None)
        if enter is None:
            return None
        best = None
        leave = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return enter
        _pivot(T, basis, leave, enter)


def rational_lp(
    c: Sequence,
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
) -> LPResult:
    """Maximize ``c x`` subject to ``A_ub x <= b_ub`` and ``A_eq x = b_eq``, ``x`` free."""
    n = len(c)
    rows = [(list(a), Fraction(b), True) for a, b in zip(A_ub, b_ub)]
    rows += [(list(a), Fraction(b), False) for a, b in zip(A_eq, b_eq)]
    m = len(rows)
    n_slack = sum(1 for _, _, ub in rows if ub)
    # columns: x+ (n), x- (n), slacks, artificials (m), rhs
    ncols = 2 * n + n_slack + m
    T: list[list[Fraction]] = []
    basis: list[int] = []
    s = 0
    for i, (a, b, ub) in enumerate(rows):
        row = [Fraction(0)] * (ncols + 1)
        for j, x in enumerate(a):
            row[j] = Fraction(x)
            row[n + j] = -Fraction(x)
        if ub:
            row[2 * n + s] = Fraction(1)
            s += 1
        row[-1] = b
        if b < 0:
            row = [-x for x in row]
        row[2 * n + n_slack + i] = Fraction(1)
        T.append(row)
        basis.append(2 * n + n_slack + i)

    art0 = 2 * n + n_slack
    # phase 1: maximize -(sum of artificials)
    obj = [Fraction(0)] * (ncols + 1)
    for row in T:
        for j in range(art0):
            obj[j] -= row[j]
        obj[-1] -= row[-1]
    T.append(obj)
    _simplex(T, basis, art0)
    if T[-1][-1] != 0:
        return LPResult(INFEASIBLE)
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= art0:
            j = next((j for j in range(art0) if T[i][j] != 0), None)
            if j is not None:
                _pivot(T, basis, i, j)
    keep = [i for i in range(m) if basis[i] < art0]
    T = [T[i] for i in keep]
    basis = [basis[i] for i in keep]

    obj = [Fraction(0)] * (ncols + 1)
    for j, x in enumerate(c):
        obj[j] = -Fraction(x)
        obj[n + j] = Fraction(x)
    for i, bcol in enumerate(basis):
        f = obj[bcol]
        if f:
            obj = [a - f * b for a, b in zip(obj, T[i])]
    T.append(obj)
    enter = _simplex(T, basis, art0)

    def recover(vec):
        return tuple(vec[j] - vec[n + j] for j in range(n))

    if enter is not None:
        direction = [Fraction(0)] * ncols
        direction[enter] = Fraction(1)
        for i, bcol in enumerate(basis):
            direction[bcol] = -T[i][enter]
        return LPResult(UNBOUNDED, ray=primitive(recover(direction)))
    values = [Fraction(0)] * ncols
    for i, bcol in enumerate(basis):
        values[bcol] = T[i][-1]
    x = recover(values)
    return LPResult(OPTIMAL, value=T[-1][-1], x=x)
