"""Quadratic forms, form-space coordinates and unimodular maps."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

from . import linalg


class FormError(ValueError):
    pass


def form_dim(d: int) -> int:
    return d * (d + 1) // 2


def slot_pairs(d: int) -> list[tuple[int, int]]:
    """Coordinate order of form space: diagonal first, then (i, j), i < j."""
    return [(i, i) for i in range(d)] + [(i, j) for i in range(d) for j in range(i + 1, d)]


def dimension_of(D: int) -> int:
    d = 0
    while form_dim(d) < D:
        d += 1
    if form_dim(d) != D:
        raise FormError(f"{D} is not a triangular number")
    return d


def parse_rational(text) -> Fraction:
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, str):
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise FormError(f"bad rational {text!r}") from exc
    raise FormError(f"bad rational {text!r}")


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class QuadForm:
    """A symmetric rational matrix, evaluated as ``x -> x^t Q x``."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(Fraction(x) for x in row) for row in self.entries)
        d = len(rows)
        if d == 0 or any(len(row) != d for row in rows):
            raise FormError("form must be a nonempty square matrix")
        for i in range(d):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise FormError(f"matrix is not symmetric at ({i}, {j})")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable]) -> "QuadForm":
        return cls(tuple(tuple(parse_rational(x) if isinstance(x, str) else Fraction(x) for x in row) for row in rows))

    @classmethod
    def from_vector(cls, d: int, vec: Sequence) -> "QuadForm":
        M = [[Fraction(0)] * d for _ in range(d)]
        for (i, j), x in zip(slot_pairs(d), vec):
            M[i][j] = M[j][i] = Fraction(x)
        return cls(tuple(map(tuple, M)))

    @classmethod
    def identity(cls, d: int) -> "QuadForm":
        return cls(linalg.identity(d))

    @classmethod
    def zero(cls, d: int) -> "QuadForm":
        return cls(tuple((0,) * d for _ in range(d)))

    @classmethod
    def outer(cls, v: Sequence) -> "QuadForm":
        return cls(tuple(tuple(a * b for b in v) for a in v))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __call__(self, v: Sequence) -> Fraction:
        return self.inner(v, v)

    def inner(self, u: Sequence, v: Sequence) -> Fraction:
        return sum(
            (x * sum(q * y for q, y in zip(row, v)) for x, row in zip(u, self.entries)),
            Fraction(0),
        )

    def __add__(self, other: "QuadForm") -> "QuadForm":
        return QuadForm(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)))

    def __sub__(self, other: "QuadForm") -> "QuadForm":
        return self + other.scale(-1)

    def scale(self, c) -> "QuadForm":
        c = Fraction(c)
        return QuadForm(tuple(tuple(c * a for a in row) for row in self.entries))

    def transform(self, A: Sequence[Sequence[int]]) -> "QuadForm":
        """The form ``A^t Q A``."""
        QA = linalg.matmul(self.entries, A)
        return QuadForm(tuple(map(tuple, linalg.matmul(linalg.transpose(A), QA))))

    def to_vector(self) -> tuple[Fraction, ...]:
        return tuple(self.entries[i][j] for i, j in slot_pairs(self.dim))

    @cached_property
    def denominator(self) -> int:
        den = 1
        for row in self.entries:
            for x in row:
                den = linalg.lcm(den, x.denominator)
        return den

    def integral(self) -> tuple[tuple[int, ...], ...]:
        """Entries scaled by the common denominator."""
        den = self.denominator
        return tuple(tuple(int(x * den) for x in row) for row in self.entries)

    def primitive(self) -> "QuadForm":
        """Positive multiple with coprime integer entries."""
        M = self.integral()
        g = 0
        for row in M:
            g = linalg.gcd(g, linalg.content(row))
        if g == 0:
            return self
        return QuadForm(tuple(tuple(x // g for x in row) for row in M))

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.entries for x in row)

    def __repr__(self) -> str:
        rows = ", ".join("[" + ", ".join(format_rational(x) for x in row) + "]" for row in self.entries)
        return f"QuadForm([{rows}])"

    def to_json(self) -> dict:
        return {"schema": "ltype.form/1", "dim": self.dim, "q": [[format_rational(x) for x in row] for row in self.entries]}

    @classmethod
    def from_json(cls, data: dict) -> "QuadForm":
        if not isinstance(data, dict) or "q" not in data:
            raise FormError("form JSON needs a 'q' matrix")
        rows = data["q"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise FormError("'q' must be a list of rows")
        parsed = [[parse_rational(x) for x in row] for row in rows]
        d = data.get("dim", len(parsed))
        if d != len(parsed) or any(len(r) != d for r in parsed):
            raise FormError(f"'q' is not a {d}x{d} matrix")
        return cls(tuple(map(tuple, parsed)))


def load_form(path) -> QuadForm:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return QuadForm.from_json(data)
    except FormError as exc:
        raise FormError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class UnimodularMap:
    """An integer matrix of determinant +-1 acting on forms by ``Q -> A^t Q A``."""

    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(int(x) for x in row) for row in self.entries)
        object.__setattr__(self, "entries", rows)
        if linalg.det(rows) not in (1, -1):
            raise FormError("matrix is not unimodular")

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __matmul__(self, other: "UnimodularMap") -> "UnimodularMap":
        return UnimodularMap(tuple(map(tuple, linalg.matmul(self.entries, other.entries))))

    def inverse(self) -> "UnimodularMap":
        return UnimodularMap(linalg.integer_inverse(self.entries))

    def apply(self, v: Sequence[int]) -> tuple[int, ...]:
        return tuple(linalg.matvec(self.entries, v))

    def to_json(self) -> list:
        return [list(row) for row in self.entries]


def form_action_matrix(A: Sequence[Sequence[int]]) -> list[list]:
    """Matrix of ``Q -> A^t Q A`` in form-space coordinates (column convention)."""
    d = len(A)
    pairs = slot_pairs(d)
    cols = []
    for i, j in pairs:
        E = [[0] * d for _ in range(d)]
        E[i][j] = E[j][i] = 1
        img = linalg.matmul(linalg.transpose(A), linalg.matmul(E, A))
        cols.append([img[a][b] for a, b in pairs])
    return linalg.transpose(cols)


def functional_to_linear(coeffs: Sequence, d: int) -> tuple:
    """Weighted-pairing coefficients to plain dot-product coefficients."""
    return tuple(c if i == j else 2 * c for c, (i, j) in zip(coeffs, slot_pairs(d)))


def linear_to_functional(lin: Sequence, d: int) -> tuple:
    return tuple(c if i == j else Fraction(c, 2) for c, (i, j) in zip(lin, slot_pairs(d)))


def evaluation_functional(v: Sequence[int]) -> tuple[int, ...]:
    """Weighted coefficients of ``Q -> Q[v]`` (the matrix ``v v^t``)."""
    d = len(v)
    return tuple(v[i] * v[j] for i, j in slot_pairs(d))


def rank(Q: QuadForm) -> int:
    return linalg.rank(Q.entries)


def is_psd(Q: QuadForm) -> bool:
    """Exact test by symmetric elimination; zero pivots must have zero rows."""
    A = [list(row) for row in Q.entries]
    n = len(A)
    active = list(range(n))
    while active:
        piv = max(active, key=lambda i: (A[i][i], -i))
        p = A[piv][piv]
        if p < 0:
            return False
        if p == 0:
            # every remaining diagonal entry is zero: the block must vanish
            return all(A[i][j] == 0 for i in active for j in active)
        active.remove(piv)
        for i in active:
            f = A[i][piv] / p
            if f:
                for j in active:
                    A[i][j] -= f * A[piv][j]
    return True


def is_pd(Q: QuadForm) -> bool:
    return is_psd(Q) and rank(Q) == Q.dim


def ldl(Q: QuadForm) -> tuple[list[Fraction], list[list[Fraction]]]:
    """``Q[x] = sum_i diag[i] * (x_i + sum_{j>i} mu[i][j] x_j)^2`` for pd ``Q``."""
    d = Q.dim
    A = [list(row) for row in Q.entries]
    diag = []
    mu = [[Fraction(0)] * d for _ in range(d)]
    for i in range(d):
        p = A[i][i]
        if p <= 0:
            raise FormError("form is not positive definite")
        diag.append(p)
        for j in range(i + 1, d):
            mu[i][j] = A[i][j] / p
        for a in range(i + 1, d):
            f = A[a][i] / p
            for b in range(i + 1, d):
                A[a][b] -= f * A[i][b]
    return diag, mu


def kernel_split(Q: QuadForm) -> tuple[UnimodularMap, QuadForm]:
    """Unimodular ``U`` with ``U^t Q U = diag(Q', 0)`` and ``Q'`` positive definite."""
    if not is_psd(Q):
        raise FormError("kernel_split needs a positive semidefinite form")
    d = Q.dim
    r = rank(Q)
    if r == d:
        return UnimodularMap(linalg.identity(d)), Q
    zero = [i for i in range(d) if all(x == 0 for x in Q.entries[i])]
    if len(zero) == d - r:
        # kernel spanned by coordinate vectors: a permutation suffices
        order = [i for i in range(d) if i not in zero] + zero
        U = [[int(order[j] == i) for j in range(d)] for i in range(d)]
    else:
        _, U, rr = linalg.column_echelon(Q.integral())
        assert rr == r
    T = Q.transform(U)
    block = QuadForm(tuple(row[:r] for row in T.entries[:r]))
    return UnimodularMap(tuple(map(tuple, U))), block
