"""Delone subdivisions and Dirichlet-Voronoi polytopes.

The Delone cells incident to the origin are dual to the vertices of the
Voronoi cell of the origin.  We compute that cell from the Voronoi-relevant
vectors, enumerate its vertices by double description and certify each
resulting cell with an exact closest-vector computation at its center.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import factorial
from typing import Iterable, Sequence

from .exact import linalg
from .exact.forms import QuadForm, format_rational, is_pd, is_psd, kernel_split, parse_rational
from .exact.lattice import closest_vectors
from .polyhedral.cones import HCone, dual_description, facets_of_rays

Vector = tuple[int, ...]


class DeloneError(ValueError):
    pass


def canonical_class(vertices: Iterable[Vector]) -> tuple[Vector, ...]:
    """Representative of a cell modulo lattice translations."""
    V = list(vertices)
    best = None
    for u in V:
        cand = tuple(sorted(tuple(a - b for a, b in zip(v, u)) for v in V))
        if best is None or cand < best:
            best = cand
    return best


def translates_through_origin(cls: Sequence[Vector]) -> list[tuple[Vector, ...]]:
    return [tuple(sorted(tuple(a - b for a, b in zip(v, u)) for v in cls)) for u in cls]


def circumcenter(Q: QuadForm, vertices: Sequence[Vector]) -> tuple[Fraction, ...]:
    """Center of the empty sphere through ``vertices`` (which contain the origin)."""
    rows = [list(linalg.matvec(Q.entries, v)) for v in vertices if any(v)]
    rhs = [Q(v) / 2 for v in vertices if any(v)]
    sol = linalg.solve(rows, rhs)
    if sol is None:
        raise DeloneError("vertices are not cospherical")
    if linalg.rank(rows) < Q.dim:
        raise DeloneError("cell is not full dimensional")
    return tuple(sol)


def simplex_volume_times_factorial(vertices: Sequence[Vector]) -> int:
    v0 = vertices[0]
    return abs(linalg.det([[a - b for a, b in zip(v, v0)] for v in vertices[1:]]))


@dataclass(frozen=True)
class DeloneCell:
    vertices: tuple[Vector, ...]
    center: tuple[Fraction, ...]
    sq_radius: Fraction

    def to_json(self) -> dict:
        return {
            "vertices": [list(v) for v in self.vertices],
            "center": [format_rational(x) for x in self.center],
            "sq_radius": format_rational(self.sq_radius),
        }

    @classmethod
    def from_json(cls, data: dict) -> "DeloneCell":
        return cls(
            tuple(sorted(tuple(int(x) for x in v) for v in data["vertices"])),
            tuple(parse_rational(x) for x in data["center"]),
            parse_rational(data["sq_radius"]),
        )

    def certify(self, Q: QuadForm) -> bool:
        """Empty sphere: the closest lattice points to the center are exactly the vertices."""
        if any(Q([a - b for a, b in zip(v, self.center)]) != self.sq_radius for v in self.vertices):
            return False
        return tuple(closest_vectors(Q, self.center)) == self.vertices


@dataclass(frozen=True)
class DeloneStar:
    """The Delone cells having the origin as a vertex."""

    form: QuadForm
    cells: tuple[DeloneCell, ...]

    @property
    def dim(self) -> int:
        return self.form.dim

    @cached_property
    def vertex_sets(self) -> frozenset[tuple[Vector, ...]]:
        return frozenset(c.vertices for c in self.cells)

    @cached_property
    def classes(self) -> tuple[tuple[Vector, ...], ...]:
        """Cells modulo translation, canonical and sorted."""
        return tuple(sorted({canonical_class(c.vertices) for c in self.cells}))

    def same_subdivision(self, other: "DeloneStar") -> bool:
        return self.vertex_sets == other.vertex_sets

    def is_triangulation(self) -> bool:
        return all(len(c.vertices) == self.dim + 1 for c in self.cells)

    def cell_size_profile(self) -> tuple[tuple[int, int], ...]:
        counts: dict[int, int] = {}
        for c in self.classes:
            counts[len(c)] = counts.get(len(c), 0) + 1
        return tuple(sorted(counts.items()))

    def certify(self) -> bool:
        return all(c.certify(self.form) for c in self.cells if c.vertices in self._class_cells)

    @cached_property
    def _class_cells(self) -> frozenset:
        return frozenset(self.classes)

    def to_json(self) -> dict:
        return {"schema": "ltype.star/1", "form": self.form.to_json(), "cells": [c.to_json() for c in self.cells]}

    @classmethod
    def from_json(cls, data: dict) -> "DeloneStar":
        form = QuadForm.from_json(data["form"])
        cells = tuple(sorted((DeloneCell.from_json(c) for c in data["cells"]), key=lambda c: c.vertices))
        return cls(form, cells)

    @classmethod
    def from_classes(cls, Q: QuadForm, classes: Iterable[Sequence[Vector]], certify: bool = True) -> "DeloneStar":
        """Expand translation classes to the star, computing centers (and certificates)."""
        cells = []
        for cl in classes:
            w0 = circumcenter(Q, cl)
            r = Q(w0)
            for u in cl:
                verts = tuple(sorted(tuple(a - b for a, b in zip(v, u)) for v in cl))
                cells.append(DeloneCell(verts, tuple(a - b for a, b in zip(w0, u)), r))
        star = cls(Q, tuple(sorted(cells, key=lambda c: c.vertices)))
        if certify:
            bad = [c for c in star.cells if c.vertices in star._class_cells and not c.certify(Q)]
            if bad:
                raise DeloneError(f"cell {bad[0].vertices} fails the empty sphere test")
            if star.class_volume() != 1:
                raise DeloneError("cells do not tile space")
        return star

    def class_volume(self) -> Fraction:
        """Total volume of the cells modulo translation (1 for a complete subdivision)."""
        return sum((cell_volume(c) for c in self.classes), Fraction(0))


def pulling_triangulation(vertices: Sequence[Vector]) -> list[tuple[Vector, ...]]:
    """Triangulate a full-dimensional lattice polytope by pulling vertices in lex order."""
    V = sorted(set(vertices))
    d = len(V[0])
    return [tuple(sorted(s)) for s in _pull(V, d)]


def _affine_dim(points: Sequence[Vector]) -> int:
    p0 = points[0]
    return linalg.rank([[a - b for a, b in zip(p, p0)] for p in points[1:]]) if len(points) > 1 else 0


def _pull(V: list[Vector], k: int) -> list[tuple[Vector, ...]]:
    """Pulling triangulation of ``conv(V)`` (affine dimension ``k``)."""
    if len(V) == k + 1:
        return [tuple(V)]
    apex = V[0]
    out = []
    for face in _facets_of_points(V, k):
        if apex in face:
            continue
        for simplex in _pull(sorted(face), k - 1):
            out.append((apex,) + simplex)
    return out


def _facets_of_points(V: list[Vector], k: int) -> list[list[Vector]]:
    """Vertex sets of the facets of ``conv(V)`` inside its own affine hull."""
    p0 = V[0]
    diffs = [[a - b for a, b in zip(p, p0)] for p in V]
    # coordinates in a basis of the affine hull
    basis_rows = []
    for p in diffs:
        if linalg.rank(basis_rows + [p]) > len(basis_rows):
            basis_rows.append(p)
    # express each point in the basis (rational coordinates)
    M = linalg.transpose(basis_rows)
    coords = [tuple(linalg.solve(M, p)) for p in diffs]
    homog = [tuple(c) + (1,) for c in coords]
    facets = facets_of_rays(homog, k + 1)
    out = []
    for f in facets:
        face = [V[i] for i, h in enumerate(homog) if linalg.dot(f, h) == 0]
        if _affine_dim(face) == k - 1:
            out.append(face)
    return out


def cell_volume(vertices: Sequence[Vector]) -> Fraction:
    d = len(vertices[0])
    total = sum(simplex_volume_times_factorial(s) for s in pulling_triangulation(vertices))
    return Fraction(total, factorial(d))


def voronoi_relevant(Q: QuadForm) -> list[Vector]:
    """Vectors defining facets of the Voronoi cell of the origin."""
    d = Q.dim
    out = []
    for c in itertools.product((0, 1), repeat=d):
        if not any(c):
            continue
        zs = closest_vectors(Q, [Fraction(-x, 2) for x in c])
        if len(zs) == 2:
            for z in zs:
                out.append(tuple(a + 2 * b for a, b in zip(c, z)))
    return sorted(out)


def delone_star(Q: QuadForm) -> DeloneStar:
    """All Delone cells at the origin, each certified by an empty-sphere test."""
    if not is_pd(Q):
        raise DeloneError("Delone subdivision needs a positive definite form")
    d = Q.dim
    Qi = Q.integral()
    # homogenized Voronoi cell: Q[v] s - 2 v^t Q x >= 0
    facets = []
    for v in voronoi_relevant(Q):
        Qv = linalg.matvec(Qi, v)
        facets.append(tuple(-2 * x for x in Qv) + (linalg.dot(v, Qv),))
    rays = dual_description(HCone(d + 1, tuple(facets)))
    cells = []
    for r in rays:
        s = r.direction[-1]
        if s <= 0:
            raise DeloneError("unbounded Voronoi cell")
        w = tuple(Fraction(x, s) for x in r.direction[:-1])
        verts = tuple(closest_vectors(Q, w))
        if (0,) * d not in verts:
            raise DeloneError("certificate failure: origin is not a vertex")
        if _affine_dim(verts) != d:
            raise DeloneError("certificate failure: cell is not full dimensional")
        cells.append(DeloneCell(verts, w, Q(w)))
    return DeloneStar(Q, tuple(sorted(cells, key=lambda c: c.vertices)))


@dataclass(frozen=True)
class VPolytope:
    ambient_dim: int
    vertices: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        verts = tuple(sorted({tuple(Fraction(x) for x in v) for v in self.vertices}))
        object.__setattr__(self, "vertices", verts)

    def scale(self, c) -> "VPolytope":
        c = Fraction(c)
        return VPolytope(self.ambient_dim, tuple(tuple(c * x for x in v) for v in self.vertices))

    def translate(self, t: Sequence) -> "VPolytope":
        return VPolytope(self.ambient_dim, tuple(tuple(x + Fraction(y) for x, y in zip(v, t)) for v in self.vertices))

    def facets(self) -> list[tuple[int, ...]]:
        """Inward facet functionals ``(a, b)`` with ``a.x + b >= 0`` (full-dimensional only)."""
        homog = [tuple(v) + (1,) for v in self.vertices]
        return facets_of_rays(homog, self.ambient_dim + 1)

    def to_json(self) -> dict:
        return {
            "schema": "ltype.polytope/1",
            "dim": self.ambient_dim,
            "vertices": [[format_rational(x) for x in v] for v in self.vertices],
        }

    @classmethod
    def from_json(cls, data: dict) -> "VPolytope":
        return cls(int(data["dim"]), tuple(tuple(parse_rational(x) for x in v) for v in data["vertices"]))


def dv_polytope(Q: QuadForm) -> VPolytope:
    """Dirichlet-Voronoi polytope in dual coordinates ``x^t Q``.

    For a semidefinite form the polytope of the definite block is embedded
    back into ``(R^d)^*`` through the unimodular kernel splitting.
    """
    if not is_psd(Q):
        raise DeloneError("DV polytope needs a positive semidefinite form")
    d = Q.dim
    if Q.is_zero():
        return VPolytope(d, ((Fraction(0),) * d,))
    U, block = kernel_split(Q)
    r = block.dim
    star = delone_star(block)
    Uinv = linalg.integer_inverse(U.entries)
    verts = []
    for c in star.cells:
        xi = list(linalg.matvec(block.entries, c.center)) + [Fraction(0)] * (d - r)
        # row vector xi * U^{-1}
        verts.append(tuple(sum(xi[k] * Uinv[k][j] for k in range(d)) for j in range(d)))
    return VPolytope(d, tuple(verts))


def support_face(P: VPolytope, f: Sequence) -> tuple[VPolytope, Fraction]:
    """Face of ``P`` maximizing ``f`` together with the support value."""
    vals = [linalg.dot(f, v) for v in P.vertices]
    eta = max(vals)
    return VPolytope(P.ambient_dim, tuple(v for v, x in zip(P.vertices, vals) if x == eta)), eta


def irredundant_points(points: Iterable[Sequence]) -> list[tuple[Fraction, ...]]:
    """Vertices of the convex hull.

    The points are projected injectively onto their affine span, the hull
    facets are found by double description, and a point is a vertex when
    its tight facets have full rank.
    """
    pts = sorted({tuple(Fraction(x) for x in p) for p in points})
    if len(pts) <= 1:
        return pts
    p0 = pts[0]
    dirs = [[a - b for a, b in zip(p, p0)] for p in pts[1:]]
    r = linalg.rank(dirs)
    if r == 0:
        return [p0]
    _, cols = linalg.rref(dirs)
    homog = [tuple(p[c] for c in cols) + (1,) for p in pts]
    facets = facets_of_rays(homog, r + 1)
    out = []
    for p, h in zip(pts, homog):
        tight = [f for f in facets if linalg.dot(f, h) == 0]
        if len(tight) >= r and linalg.rank(tight) == r:
            out.append(p)
    return out


def minkowski_sum(P1: VPolytope, P2: VPolytope) -> VPolytope:
    if P1.ambient_dim != P2.ambient_dim:
        raise DeloneError("ambient dimensions differ")
    sums = {tuple(a + b for a, b in zip(u, v)) for u in P1.vertices for v in P2.vertices}
    return VPolytope(P1.ambient_dim, tuple(irredundant_points(sums)))


def _project_to_span(P: VPolytope, cols: list[int]) -> list[tuple[Fraction, ...]]:
    return [tuple(v[c] for c in cols) for v in P.vertices]


def _normal_fan(points: list[tuple[Fraction, ...]]) -> frozenset:
    k = len(points[0])
    if k == 0 or len(points) == 1:
        return frozenset([frozenset()])
    homog = [tuple(p) + (1,) for p in points]
    facets = facets_of_rays(homog, k + 1)
    normals = [linalg.primitive(f[:-1]) for f in facets]
    cones = set()
    for h in homog:
        tight = frozenset(n for n, f in zip(normals, facets) if linalg.dot(f, h) == 0)
        cones.add(tight)
    return frozenset(cones)


def strongly_isomorphic(P1: VPolytope, P2: VPolytope) -> bool:
    """Equal normal fans: same facet normals and same normal cones at vertices."""
    if P1.ambient_dim != P2.ambient_dim:
        raise DeloneError("ambient dimensions differ")

    def directions(P):
        v0 = P.vertices[0]
        return [[a - b for a, b in zip(v, v0)] for v in P.vertices[1:]]

    D1, D2 = directions(P1), directions(P2)
    r = linalg.rank(D1)
    if r != linalg.rank(D2) or linalg.rank(D1 + D2) != r:
        return False
    if r == 0:
        return True
    _, pivots = linalg.rref(D1)
    # pivot coordinates restrict injectively to the common linear span
    return _normal_fan(_project_to_span(P1, pivots)) == _normal_fan(_project_to_span(P2, pivots))
