"""L-type domains (secondary cones) of Delone subdivisions.

Forms are points of form space in the coordinates of
:func:`ltype.exact.forms.slot_pairs`.  A functional on forms is stored by
its dual matrix ``F`` (weighted pairing ``tr(F Q)``); ``linear`` converts to
plain dot-product coefficients for the cone machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .delone import (
    DeloneStar,
    Vector,
    _affine_dim,
    canonical_class,
    delone_star,
    pulling_triangulation,
    translates_through_origin,
)
from .exact import linalg
from .exact.forms import (
    FormError,
    QuadForm,
    UnimodularMap,
    evaluation_functional,
    form_dim,
    functional_to_linear,
    is_psd,
    kernel_split,
    slot_pairs,
)
from .exact.isometry import isometries
from .polyhedral.cones import HCone, dual_description
from .polyhedral.lp import OPTIMAL, rational_lp

Functional = tuple[int, ...]


class SecondaryConeError(ValueError):
    pass


class DegenerateFacetError(SecondaryConeError):
    pass


def _affine_combination(point: Vector, simplex: Sequence[Vector]) -> list[Fraction]:
    """Barycentric coordinates of ``point`` with respect to a simplex."""
    d = len(point)
    rows = [[v[k] for v in simplex] for k in range(d)] + [[1] * len(simplex)]
    sol = linalg.solve(rows, list(point) + [1])
    if sol is None:
        raise SecondaryConeError("point is not in the affine hull")
    return sol


def coplanarity_functional(point: Vector, basis: Sequence[Vector]) -> Functional:
    """``Q -> Q[point] - sum mu_i Q[basis_i]`` with ``point = sum mu_i basis_i``."""
    mu = _affine_combination(point, basis)
    F = [Fraction(x) for x in evaluation_functional(point)]
    for m, v in zip(mu, basis):
        if m:
            for k, x in enumerate(evaluation_functional(v)):
                F[k] -= m * x
    return linalg.primitive(F)


def evaluate(F: Sequence, Q: QuadForm) -> Fraction:
    """Weighted pairing ``tr(F Q)``."""
    return sum((f * (q if i == j else 2 * q) for f, q, (i, j) in zip(F, Q.to_vector(), slot_pairs(Q.dim))), Fraction(0))


def _affine_basis(vertices: Sequence[Vector]) -> list[Vector]:
    basis = [vertices[0]]
    for v in vertices[1:]:
        if _affine_dim(basis + [v]) == len(basis):
            basis.append(v)
    return basis


def coplanarity_equalities(classes: Iterable[Sequence[Vector]], d: int) -> list[Functional]:
    out = set()
    for cl in classes:
        if len(cl) <= d + 1:
            continue
        basis = _affine_basis(list(cl))
        for u in cl:
            if u not in basis:
                out.add(linalg.sign_normalized(coplanarity_functional(u, basis)))
    return sorted(out)


def triangulate_classes(classes: Iterable[Sequence[Vector]], d: int) -> list[tuple[Vector, ...]]:
    out = set()
    for cl in classes:
        if len(cl) == d + 1:
            out.add(tuple(cl))
        else:
            for s in pulling_triangulation(cl):
                out.add(canonical_class(s))
    return sorted(out)


def walls(simplex_classes: Iterable[Sequence[Vector]]) -> dict:
    """Walls through the origin, mapped to ``(simplex, opposite vertex, class, shift)`` pairs.

    ``simplex`` is the translate ``class - shift`` of a simplex class.
    """
    out: dict = {}
    for sc in simplex_classes:
        for u in sc:
            simplex = tuple(sorted(tuple(a - b for a, b in zip(v, u)) for v in sc))
            for v in simplex:
                if not any(v):
                    continue
                wall = tuple(w for w in simplex if w != v)
                out.setdefault(wall, []).append((simplex, v, sc, u))
    return out


class _Barycentric:
    """Cached inverses of homogenized simplex matrices."""

    def __init__(self):
        self._inv: dict = {}

    def __call__(self, point: Vector, simplex: tuple[Vector, ...]) -> list[Fraction]:
        inv = self._inv.get(simplex)
        if inv is None:
            d = len(point)
            rows = [[v[k] for v in simplex] for k in range(d)] + [[1] * len(simplex)]
            inv = self._inv[simplex] = linalg.inverse(rows)
        vec = list(point) + [1]
        return [sum((a * b for a, b in zip(row, vec) if b), Fraction(0)) for row in inv]


def _functional_from(point: Vector, simplex: Sequence[Vector], mu: Sequence[Fraction]) -> Functional:
    F = [Fraction(x) for x in evaluation_functional(point)]
    for m, v in zip(mu, simplex):
        if m:
            for k, x in enumerate(evaluation_functional(v)):
                if x:
                    F[k] -= m * x
    return linalg.primitive(F)


def regulators(simplex_classes: Sequence[Sequence[Vector]]) -> dict[Functional, list[tuple[Vector, ...]]]:
    """Regulator functionals of all interior walls, keyed by primitive functional.

    Values are the circuits (canonical classes of the two adjacent simplices
    together) carrying that regulator.
    """
    key = tuple(tuple(c) for c in simplex_classes)
    cached = _REGULATOR_CACHE.get(key)
    if cached is not None:
        return cached
    bary = _Barycentric()
    seen_circuits: set = set()
    out: dict[Functional, list] = {}
    for wall, pair in walls(simplex_classes).items():
        if len(pair) != 2:
            raise SecondaryConeError(f"wall {wall} is not shared by exactly two simplices")
        (s1, a, c1, u), (s2, b, _, _) = pair
        circuit = canonical_class(set(s1) | set(s2))
        if circuit in seen_circuits:
            continue
        seen_circuits.add(circuit)
        # the regulator is translation invariant: work in the class itself
        shifted = tuple(x + y for x, y in zip(b, u))
        F = _functional_from(shifted, c1, bary(shifted, tuple(c1)))
        out.setdefault(F, []).append(circuit)
    if len(_REGULATOR_CACHE) > 64:
        _REGULATOR_CACHE.clear()
    _REGULATOR_CACHE[key] = out
    return out


_REGULATOR_CACHE: dict = {}


@dataclass(frozen=True)
class SecondaryCone:
    """Equalities and irredundant facet inequalities of an L-type domain."""

    dim: int
    equalities: tuple[Functional, ...]
    facets: tuple[Functional, ...]
    witness: QuadForm | None = None
    rays: tuple[tuple[int, ...], ...] | None = field(default=None, compare=False)

    @property
    def ambient_dim(self) -> int:
        return form_dim(self.dim)

    @property
    def cone_dim(self) -> int:
        return self.ambient_dim - linalg.rank(self.equalities) if self.equalities else self.ambient_dim

    def linear_facets(self) -> list[tuple[int, ...]]:
        return [functional_to_linear(f, self.dim) for f in self.facets]

    def linear_equalities(self) -> list[tuple[int, ...]]:
        return [functional_to_linear(f, self.dim) for f in self.equalities]

    def hcone(self) -> HCone:
        """Facet description as an :class:`HCone` (only for full-dimensional cones)."""
        if self.equalities:
            raise SecondaryConeError("cone is not full dimensional")
        return HCone(self.ambient_dim, tuple(self.linear_facets()), irredundant=True)

    def contains(self, Q: QuadForm, strict: bool = True) -> bool:
        if any(evaluate(E, Q) != 0 for E in self.equalities):
            return False
        vals = [evaluate(F, Q) for F in self.facets]
        return all(v > 0 for v in vals) if strict else all(v >= 0 for v in vals)

    def to_json(self) -> dict:
        out = {
            "schema": "ltype.cone/1",
            "ambient_dim": self.ambient_dim,
            "equalities": [list(e) for e in self.equalities],
            "facets": [list(f) for f in self.facets],
        }
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "SecondaryCone":
        from .exact.forms import dimension_of

        D = int(data["ambient_dim"])
        witness = QuadForm.from_json(data["witness"]) if data.get("witness") else None
        return cls(
            dimension_of(D),
            tuple(tuple(int(x) for x in e) for e in data.get("equalities", [])),
            tuple(tuple(int(x) for x in f) for f in data["facets"]),
            witness,
        )


def _independent(rows: Sequence[Functional]) -> list[Functional]:
    out: list = []
    for r in rows:
        if linalg.rank(out + [r]) > len(out):
            out.append(r)
    return out


def _reduce(d: int, classes: Sequence[Sequence[Vector]], method: str = "dd"):
    """Equalities, irredundant facets and extreme rays of the cone of a subdivision."""
    D = form_dim(d)
    equalities = _independent(coplanarity_equalities(classes, d))
    lin_eq = [functional_to_linear(e, d) for e in equalities]
    simplices = triangulate_classes(classes, d)
    regs = regulators(simplices)
    candidates = []
    for F in sorted(regs):
        lin = functional_to_linear(F, d)
        if lin_eq and linalg.rank(lin_eq + [lin]) == len(lin_eq):
            continue
        candidates.append(F)
    if lin_eq:
        N = linalg.nullspace(lin_eq, ncols=D)
    else:
        N = [tuple(int(i == j) for j in range(D)) for i in range(D)]
    k = len(N)
    # reduced coordinates: y -> sum y_i N_i
    reduced: dict[tuple[int, ...], Functional] = {}
    for F in candidates:
        lin = functional_to_linear(F, d)
        g = linalg.primitive([linalg.dot(lin, n) for n in N])
        if g not in reduced:
            reduced[g] = F
    if not reduced:
        return equalities, [], None
    if k == 1:
        g, F = min(reduced.items(), key=lambda item: item[1])
        ray = linalg.primitive(N[0]) if g[0] > 0 else tuple(-x for x in linalg.primitive(N[0]))
        return equalities, [F], [ray]
    cone = HCone(k, tuple(reduced))
    if method == "lp":
        keep = _irredundant_lp(cone)
        rays = None
    else:
        rr = dual_description(cone)
        keep = []
        for i, g in enumerate(cone.facets):
            inc = [r.direction for r in rr if i in r.incidence]
            if linalg.rank(inc) == k - 1:
                keep.append(i)
        rays = [linalg.primitive([sum(r.direction[a] * N[a][j] for a in range(k)) for j in range(D)]) for r in rr]
    facets = sorted(reduced[cone.facets[i]] for i in keep)
    return equalities, facets, rays


def _irredundant_lp(cone: HCone) -> list[int]:
    """Indices of facets whose removal enlarges the cone (one LP each)."""
    keep = []
    F = cone.facets
    for i, f in enumerate(F):
        others = [g for j, g in enumerate(F) if j != i]
        # minimize f(y) subject to the others and f(y) >= -1
        res = rational_lp(
            [-x for x in f],
            A_ub=[[-x for x in g] for g in others] + [[-x for x in f]],
            b_ub=[0] * len(others) + [1],
        )
        if res.status == OPTIMAL and res.value > 0:
            keep.append(i)
    return keep


def secondary_cone(star: DeloneStar, method: str = "dd") -> SecondaryCone:
    """The L-type domain of the subdivision given by ``star``.

    ``method`` selects how redundant regulators are discarded: ``"dd"`` reads
    facets off the incidences of a double description, ``"lp"`` solves one
    exact LP per candidate.
    """
    d = star.dim
    eqs, facets, rays = _reduce(d, star.classes, method)
    Q = star.form
    if any(evaluate(E, Q) != 0 for E in eqs) or any(evaluate(F, Q) <= 0 for F in facets):
        raise SecondaryConeError("star does not belong to its form (stale certificate)")
    return SecondaryCone(d, tuple(eqs), tuple(facets), Q, tuple(rays) if rays else None)


def cone_of_classes(d: int, classes: Sequence[Sequence[Vector]]) -> SecondaryCone:
    eqs, facets, rays = _reduce(d, classes)
    return SecondaryCone(d, tuple(eqs), tuple(facets), None, tuple(rays) if rays else None)


def interior_form(cone: SecondaryCone) -> QuadForm:
    """A form strictly inside the cone, maximizing the minimal facet slack."""
    d = cone.dim
    D = cone.ambient_dim
    if not cone.facets:
        return cone.witness if cone.witness is not None else QuadForm.identity(d)
    lins = cone.linear_facets()
    total = [sum(f[j] for f in lins) for j in range(D)]
    res = rational_lp(
        [0] * D + [1],
        A_ub=[[-x for x in f] + [1] for f in lins] + [total + [0]],
        b_ub=[0] * len(lins) + [1],
        A_eq=[list(e) + [0] for e in cone.linear_equalities()],
        b_eq=[0] * len(cone.equalities),
    )
    if res.status != OPTIMAL or res.value <= 0:
        raise SecondaryConeError("cone has empty interior")
    return QuadForm.from_vector(d, linalg.primitive(res.x[:D])).primitive()


def rigidity_degree(Q: QuadForm) -> int:
    """Dimension of the linear span of the L-type domain containing ``Q``."""
    if not is_psd(Q):
        raise FormError("rigidity degree needs a positive semidefinite form")
    if Q.is_zero():
        raise FormError("the zero form lies in no L-type domain")
    _, block = kernel_split(Q)
    star = delone_star(block)
    eqs = coplanarity_equalities(star.classes, block.dim)
    return form_dim(block.dim) - (linalg.rank(eqs) if eqs else 0)


def _facet_is_degenerate(cone: SecondaryCone, F: Functional) -> bool:
    """True when the relative interior of the facet holds no positive definite form."""
    d = cone.dim
    lin = functional_to_linear(F, d)
    if cone.rays is not None:
        inc = [r for r in cone.rays if linalg.dot(lin, r) == 0]
        if not inc:
            return True
        total = [sum(col) for col in zip(*inc)]
        return linalg.rank(QuadForm.from_vector(d, total).entries) < d
    wall = SecondaryCone(d, cone.equalities + (F,), tuple(G for G in cone.facets if G != F), cone.witness)
    inner = interior_form(wall)
    return linalg.rank(inner.entries) < d


def _flip_circuit(circuit: Sequence[Vector], present: set) -> tuple[list, list]:
    """Old and new simplex classes of a circuit ``d + 2`` points."""
    d = len(circuit[0])
    rows = [[z[k] for z in circuit] for k in range(d)] + [[1] * len(circuit)]
    ns = linalg.nullspace(rows)
    if len(ns) != 1:
        raise SecondaryConeError("repartitioning polytope is not a circuit")
    alpha = ns[0]
    pos = [canonical_class(z for z in circuit if z != circuit[i]) for i, a in enumerate(alpha) if a > 0]
    neg = [canonical_class(z for z in circuit if z != circuit[i]) for i, a in enumerate(alpha) if a < 0]
    if all(s in present for s in pos):
        return pos, neg
    if all(s in present for s in neg):
        return neg, pos
    raise SecondaryConeError("circuit triangulation is not part of the subdivision")


def flip_classes(d: int, classes: Sequence[tuple[Vector, ...]], facet: Functional, cone: SecondaryCone) -> list[tuple[Vector, ...]]:
    """Simplex classes of the triangulation across a non-degenerate facet (no certificate)."""
    facet = tuple(facet)
    if facet not in cone.facets:
        raise SecondaryConeError("functional is not a facet of the secondary cone")
    if _facet_is_degenerate(cone, facet):
        raise DegenerateFacetError("facet lies on the boundary of the positive semidefinite cone")
    present = set(classes)
    lin = linalg.primitive(functional_to_linear(facet, d))
    removed, added = set(), set()
    for F, circuits in regulators(classes).items():
        if linalg.primitive(functional_to_linear(F, d)) != lin:
            continue
        for circuit in circuits:
            old, new = _flip_circuit(circuit, present)
            removed.update(old)
            added.update(new)
    if not removed:
        raise SecondaryConeError("no wall carries this facet")
    return sorted((present - removed) | added)


def ray_sum_witness(cone: SecondaryCone) -> QuadForm:
    """Sum of the primitive extreme rays: an exact interior point of a pointed cone."""
    if cone.rays:
        total = [sum(col) for col in zip(*cone.rays)]
        return QuadForm.from_vector(cone.dim, total).primitive()
    return interior_form(cone)


def flip(star: DeloneStar, facet: Functional, cone: SecondaryCone | None = None, certify: bool = True) -> DeloneStar:
    """Delone star of the neighbouring domain across ``facet``.

    The circuits carrying the facet are retriangulated, and the result is
    certified at the sum of the extreme rays of the new cone.
    """
    d = star.dim
    if not star.is_triangulation():
        raise SecondaryConeError("flips are defined for Delone triangulations")
    if cone is None:
        cone = secondary_cone(star)
    classes = flip_classes(d, star.classes, facet, cone)
    witness = ray_sum_witness(cone_of_classes(d, classes))
    return DeloneStar.from_classes(witness, classes, certify=certify)


def class_characteristic_form(d: int, classes: Iterable[Sequence[Vector]]) -> QuadForm:
    """``sum over star cells and vertex pairs of (v - w)(v - w)^t``.

    Every translation class contributes once per vertex, since the star
    holds one translate of it through each vertex.
    """
    X = [[0] * d for _ in range(d)]
    for V in classes:
        m = len(V)
        for a in range(m):
            for b in range(a + 1, m):
                diff = [x - y for x, y in zip(V[a], V[b])]
                for i in range(d):
                    if diff[i]:
                        for j in range(d):
                            X[i][j] += m * diff[i] * diff[j]
    return QuadForm(tuple(map(tuple, X)))


def characteristic_form(star: DeloneStar) -> QuadForm:
    """Positive definite form preserved by every symmetry of the subdivision."""
    return class_characteristic_form(star.dim, star.classes)


def _profile(classes: Iterable[Sequence[Vector]]) -> tuple[tuple[int, int], ...]:
    counts: dict[int, int] = {}
    for c in classes:
        counts[len(c)] = counts.get(len(c), 0) + 1
    return tuple(sorted(counts.items()))


def class_equivalences(d: int, classes1: Sequence, classes2: Sequence, X1: QuadForm | None = None, X2: QuadForm | None = None):
    """Yield every ``U`` carrying the subdivision ``classes1`` to ``classes2`` (as ``U^{-1}``)."""
    if len(classes1) != len(classes2) or _profile(classes1) != _profile(classes2):
        return
    X1 = X1 or class_characteristic_form(d, classes1)
    X2 = X2 or class_characteristic_form(d, classes2)
    target = {t for cl in classes2 for t in translates_through_origin(cl)}
    for B in isometries(X1, X2):
        Bt = tuple(tuple(int(x) for x in row) for row in linalg.transpose(B.entries))
        ok = True
        for cl in classes1:
            img = tuple(sorted(tuple(sum(a * x for a, x in zip(row, v)) for row in Bt) for v in cl))
            if img not in target:
                ok = False
                break
        if ok:
            # U^{-1} = B^t, so U = (B^t)^{-1}
            yield UnimodularMap(linalg.integer_inverse(Bt))


def _equivalences(s1: DeloneStar, s2: DeloneStar):
    if s1.dim != s2.dim:
        return iter(())
    return class_equivalences(s1.dim, s1.classes, s2.classes)


def group_generators(elements: Sequence, d: int) -> list:
    """A small generating set of a finite matrix group given by its elements."""
    group = {linalg.identity(d)}
    gens: list = []
    for g in elements:
        if g in group:
            continue
        gens.append(g)
        frontier = list(group)
        while frontier:
            nxt = []
            for x in frontier:
                for h in gens:
                    y = tuple(map(tuple, linalg.matmul(x, h)))
                    if y not in group:
                        group.add(y)
                        nxt.append(y)
            frontier = nxt
    return gens or [linalg.identity(d)]


def triangulation_isomorphic(s1: DeloneStar, s2: DeloneStar) -> UnimodularMap | None:
    """``U`` with ``U^t D1 U = D2`` for the two L-type domains, or ``None``."""
    return next(_equivalences(s1, s2), None)


def triangulation_automorphisms(star: DeloneStar) -> tuple[list[UnimodularMap], int]:
    """Generators and order of the stabilizer of the subdivision in GL_d(Z)."""
    elements = [U.entries for U in _equivalences(star, star)]
    return [UnimodularMap(g) for g in group_generators(elements, star.dim)], len(elements)
