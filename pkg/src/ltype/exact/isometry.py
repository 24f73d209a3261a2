"""Arithmetic equivalence and automorphism groups of positive definite forms.

The search follows Plesken and Souvignier: fix a basis ``b_1..b_d`` taken
from a characteristic set of short vectors of the target form, then choose
images for the ``b_i`` one at a time among vectors of the same length whose
inner products agree with the images chosen so far.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from typing import Iterator, Sequence

from . import linalg
from .forms import FormError, QuadForm, UnimodularMap, form_action_matrix, form_dim, is_pd
from .lattice import enumerate_ellipsoid


def _scaled_pair(Q1: QuadForm, Q2: QuadForm) -> tuple[QuadForm, QuadForm]:
    den = linalg.lcm(Q1.denominator, Q2.denominator)
    return Q1.scale(den), Q2.scale(den)


def _int_matrix(Q: QuadForm) -> list[list[int]]:
    return [[int(x) for x in row] for row in Q.entries]


class _ShortVectors:
    """Nonzero vectors up to a length, with cached images under the form."""

    def __init__(self, Q: QuadForm, m):
        self.Q = _int_matrix(Q)
        self.vectors = sorted(
            (z for z, _ in enumerate_ellipsoid(Q, [0] * Q.dim, m) if any(z)),
            key=lambda z: (Q(z), z),
        )
        self.images = [tuple(linalg.matvec(self.Q, v)) for v in self.vectors]
        self.lengths = [linalg.dot(v, w) for v, w in zip(self.vectors, self.images)]
        self.by_length: dict[int, list[int]] = {}
        for k, n in enumerate(self.lengths):
            self.by_length.setdefault(n, []).append(k)
        self.index = {v: k for k, v in enumerate(self.vectors)}

    def profile(self) -> tuple:
        return tuple((n, len(ks)) for n, ks in sorted(self.by_length.items()))


def characteristic_length(Q: QuadForm) -> Fraction:
    """Smallest ``m`` such that the vectors of length at most ``m`` span."""
    d = Q.dim
    top = max(Q[i, i] for i in range(d))
    vecs = sorted(((n, z) for z, n in enumerate_ellipsoid(Q, [0] * d, top) if any(z)))
    chosen: list[tuple[int, ...]] = []
    r = 0
    for n, z in vecs:
        if linalg.rank(chosen + [z]) > r:
            chosen.append(z)
            r += 1
            if r == d:
                return n
    raise FormError("form is not positive definite")


def form_invariants(Q: QuadForm, levels: int = 3) -> tuple:
    """Cheap equivalence invariants: dimension, determinant, short-vector counts.

    Two arithmetically equivalent forms always have equal invariants.
    """
    m = characteristic_length(Q)
    counts: dict[Fraction, int] = {}
    for _, n in enumerate_ellipsoid(Q, [0] * Q.dim, m):
        counts[n] = counts.get(n, 0) + 1
    profile = tuple(sorted(counts.items()))[: levels + 1]
    return (Q.dim, linalg.det(Q.entries), m, profile)


class _Search:
    """Backtracking for maps ``A`` with ``A^t Q1 A = Q2`` (``Q1``, ``Q2`` integral)."""

    def __init__(self, Q1: QuadForm, Q2: QuadForm):
        self.d = Q1.dim
        m = characteristic_length(Q2)
        self.S1 = _ShortVectors(Q1, m)
        self.S2 = _ShortVectors(Q2, m)
        self.ok = self.S1.profile() == self.S2.profile()
        basis: list[int] = []
        chosen: list[tuple[int, ...]] = []
        for k, v in enumerate(self.S2.vectors):
            if linalg.rank(chosen + [v]) > len(chosen):
                chosen.append(v)
                basis.append(k)
                if len(chosen) == self.d:
                    break
        self.basis = basis
        B = linalg.transpose([self.S2.vectors[k] for k in basis])
        self.det_b = linalg.det(B)
        # adjugate so that B^{-1} = adj / det
        inv = linalg.inverse(B)
        self.adj = [[int(x * self.det_b) for x in row] for row in inv]
        self.gram = [
            [linalg.dot(self.S2.vectors[a], self.S2.images[b]) for b in basis] for a in basis
        ]

    def candidates(self, level: int, chosen: Sequence[int]) -> list[int]:
        S1 = self.S1
        out = []
        for k in S1.by_length.get(self.gram[level][level], ()):
            img = S1.images[k]
            if all(linalg.dot(S1.vectors[c], img) == self.gram[j][level] for j, c in enumerate(chosen)):
                out.append(k)
        return out

    def matrix(self, chosen: Sequence[int]):
        C = linalg.transpose([self.S1.vectors[k] for k in chosen])
        A = linalg.matmul(C, self.adj)
        det_b = self.det_b
        if any(x % det_b for row in A for x in row):
            return None
        return tuple(tuple(x // det_b for x in row) for row in A)

    def search(self, prefix: list[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
        level = len(prefix)
        if level == self.d:
            A = self.matrix(prefix)
            if A is not None:
                yield A
            return
        for k in self.candidates(level, prefix):
            prefix.append(k)
            yield from self.search(prefix)
            prefix.pop()


def isometries(Q1: QuadForm, Q2: QuadForm) -> Iterator[UnimodularMap]:
    """Every ``A`` in GL_d(Z) with ``A^t Q1 A = Q2`` (lazily)."""
    if Q1.dim != Q2.dim:
        return
    if not (is_pd(Q1) and is_pd(Q2)):
        raise FormError("isometry search needs positive definite forms")
    if linalg.det(Q1.entries) != linalg.det(Q2.entries):
        return
    S1, S2 = _scaled_pair(Q1, Q2)
    if characteristic_length(S1) != characteristic_length(S2):
        return
    s = _Search(S1, S2)
    if not s.ok:
        return
    for A in s.search([]):
        yield UnimodularMap(A)


def isometry(Q1: QuadForm, Q2: QuadForm) -> UnimodularMap | None:
    """Some ``A`` with ``A^t Q1 A = Q2``, or ``None`` if the forms are inequivalent."""
    return next(isometries(Q1, Q2), None)


def _orbit(v: tuple[int, ...], gens: Sequence[Sequence[Sequence[int]]]) -> set[tuple[int, ...]]:
    seen = {v}
    todo = [v]
    while todo:
        w = todo.pop()
        for g in gens:
            u = tuple(linalg.matvec(g, w))
            if u not in seen:
                seen.add(u)
                todo.append(u)
    return seen


def automorphisms(Q: QuadForm) -> tuple[list[UnimodularMap], int]:
    """Generators and order of ``{A : A^t Q A = Q}`` via a stabilizer chain."""
    if not is_pd(Q):
        raise FormError("automorphisms need a positive definite form")
    S = Q.scale(Q.denominator)
    s = _Search(S, S)
    d = s.d
    base = [s.S2.vectors[k] for k in s.basis]
    base_idx = [s.S1.index[v] for v in base]
    gens: list[tuple[tuple[int, ...], ...]] = []
    order = 1
    for level in reversed(range(d)):
        fixed = base_idx[:level]
        orbit = _orbit(base[level], gens)
        for k in s.candidates(level, fixed):
            c = s.S1.vectors[k]
            if c in orbit:
                continue
            A = next(s.search(fixed + [k]), None)
            if A is not None:
                gens.append(A)
                orbit = _orbit(base[level], gens)
        order *= len(orbit)
    if not gens:
        gens = [linalg.identity(d)]
    return [UnimodularMap(g) for g in gens], order


def group_elements(gens: Sequence[UnimodularMap], limit: int | None = None) -> list[tuple[tuple[int, ...], ...]]:
    """All elements of the finite matrix group generated by ``gens`` (breadth first)."""
    if not gens:
        return []
    d = gens[0].dim
    ident = linalg.identity(d)
    mats = [g.entries for g in gens]
    seen = {ident}
    queue = deque([ident])
    while queue:
        x = queue.popleft()
        for g in mats:
            y = tuple(map(tuple, linalg.matmul(x, g)))
            if y not in seen:
                seen.add(y)
                if limit is not None and len(seen) > limit:
                    raise ValueError("group larger than limit")
                queue.append(y)
    return sorted(seen)


def fixed_subspace(generators: Sequence[UnimodularMap], d: int | None = None) -> list[tuple[int, ...]]:
    """Basis (form-space vectors) of the forms fixed by every generator."""
    if d is None:
        if not generators:
            raise ValueError("dimension needed for an empty generator list")
        d = generators[0].dim
    D = form_dim(d)
    rows: list[list] = []
    for g in generators:
        M = form_action_matrix(g.entries)
        for i in range(D):
            rows.append([M[i][j] - (i == j) for j in range(D)])
    return linalg.nullspace(rows, ncols=D)
