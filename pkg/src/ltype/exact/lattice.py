"""Fincke-Pohst enumeration of lattice vectors with exact rational bounds."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterator, Sequence

from .forms import FormError, QuadForm, ldl


def _upper(c: Fraction, R: Fraction) -> int:
    """Largest integer z with z - c <= sqrt(R)."""
    z = math.floor(float(c) + math.sqrt(float(R)))

    def ok(z):
        s = z - c
        return s <= 0 or s * s <= R

    while not ok(z):
        z -= 1
    while ok(z + 1):
        z += 1
    return z


def _lower(c: Fraction, R: Fraction) -> int:
    """Smallest integer z with c - z <= sqrt(R)."""
    z = math.ceil(float(c) - math.sqrt(float(R)))

    def ok(z):
        s = c - z
        return s <= 0 or s * s <= R

    while not ok(z):
        z += 1
    while ok(z - 1):
        z -= 1
    return z


def enumerate_ellipsoid(Q: QuadForm, target: Sequence, bound) -> Iterator[tuple[tuple[int, ...], Fraction]]:
    """Yield ``(z, Q[z - target])`` for every integer ``z`` with ``Q[z - target] <= bound``."""
    bound = Fraction(bound)
    if bound < 0:
        return
    diag, mu = ldl(Q)
    d = Q.dim
    t = [Fraction(x) for x in target]
    z = [0] * d

    def rec(i: int, rem: Fraction):
        # center of coordinate i given the already fixed coordinates above it
        c = t[i] - sum((mu[i][j] * (z[j] - t[j]) for j in range(i + 1, d)), Fraction(0))
        R = rem / diag[i]
        lo, hi = _lower(c, R), _upper(c, R)
        for zi in range(lo, hi + 1):
            s = zi - c
            left = rem - diag[i] * s * s
            if left < 0:
                continue
            z[i] = zi
            if i == 0:
                yield tuple(z), bound - left
            else:
                yield from rec(i - 1, left)
        z[i] = 0

    yield from rec(d - 1, bound)


def vectors_below(Q: QuadForm, c) -> list[tuple[int, ...]]:
    """All integer vectors ``v`` with ``Q[v] <= c``, sorted lexicographically."""
    return sorted(z for z, _ in enumerate_ellipsoid(Q, [0] * Q.dim, c))


def length_profile(Q: QuadForm, c) -> dict[Fraction, int]:
    """Number of nonzero vectors at each length ``<= c``."""
    out: dict[Fraction, int] = {}
    for z, n in enumerate_ellipsoid(Q, [0] * Q.dim, c):
        if any(z):
            out[n] = out.get(n, 0) + 1
    return dict(sorted(out.items()))


def _babai(Q: QuadForm, t: Sequence[Fraction]) -> tuple[int, ...]:
    diag, mu = ldl(Q)
    d = Q.dim
    z = [0] * d
    for i in reversed(range(d)):
        c = t[i] - sum((mu[i][j] * (z[j] - t[j]) for j in range(i + 1, d)), Fraction(0))
        z[i] = math.floor(c + Fraction(1, 2))
    return tuple(z)


def closest_vectors(Q: QuadForm, t: Sequence) -> list[tuple[int, ...]]:
    """All integer vectors minimizing ``Q[z - t]``, sorted lexicographically."""
    t = [Fraction(x) for x in t]
    if len(t) != Q.dim:
        raise FormError("target has the wrong dimension")
    z0 = _babai(Q, t)
    best = Q([a - b for a, b in zip(z0, t)])
    found: list[tuple[int, ...]] = []
    for z, n in enumerate_ellipsoid(Q, t, best):
        if n < best:
            best, found = n, [z]
        elif n == best:
            found.append(z)
    return sorted(found)


def closest_distance(Q: QuadForm, t: Sequence) -> Fraction:
    z = closest_vectors(Q, t)[0]
    return Q([a - Fraction(b) for a, b in zip(z, t)])
