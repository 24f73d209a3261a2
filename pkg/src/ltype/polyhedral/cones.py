"""Pointed polyhedral cones and the double description method."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from ..exact import linalg
from .lp import OPTIMAL, rational_lp


class ConeError(ValueError):
    pass


class NotPointedError(ConeError):
    def __init__(self, direction):
        super().__init__(f"cone is not pointed; lineality direction {list(direction)}")
        self.direction = tuple(direction)


@dataclass(frozen=True)
class HCone:
    """``{x : f(x) >= 0 for every facet f}`` with primitive integer functionals."""

    ambient_dim: int
    facets: tuple[tuple[int, ...], ...]
    irredundant: bool = False

    def __post_init__(self):
        fs = tuple(linalg.primitive(f) for f in self.facets)
        if any(len(f) != self.ambient_dim for f in fs):
            raise ConeError("facet length does not match the ambient dimension")
        if any(not any(f) for f in fs):
            raise ConeError("zero functional")
        object.__setattr__(self, "facets", fs)

    def values(self, x: Sequence) -> list:
        return [linalg.dot(f, x) for f in self.facets]

    def contains(self, x: Sequence) -> bool:
        return all(v >= 0 for v in self.values(x))

    def incidence(self, x: Sequence) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.values(x)) if v == 0)

    def to_json(self, group=None) -> dict:
        out = {"schema": "ltype.hcone/1", "ambient_dim": self.ambient_dim, "facets": [list(f) for f in self.facets]}
        if group:
            out["group"] = [[list(row) for row in g] for g in group]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "HCone":
        try:
            D = int(data["ambient_dim"])
            facets = [tuple(int(x) for x in f) for f in data["facets"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConeError(f"malformed cone JSON: {exc}") from exc
        return cls(D, tuple(facets))


def load_cone(path) -> tuple[HCone, list]:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConeError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        cone = HCone.from_json(data)
    except ConeError as exc:
        raise ConeError(f"{path}: {exc}") from exc
    return cone, data.get("group", [])


@dataclass(frozen=True, order=True)
class Ray:
    direction: tuple[int, ...]
    incidence: tuple[int, ...] = field(default=(), compare=False)

    @classmethod
    def of(cls, cone: HCone, vec: Sequence) -> "Ray":
        v = linalg.primitive(vec)
        return cls(v, cone.incidence(v))


def _popcount(x: int) -> int:
    return bin(x).count("1")


def check_ray(cone: HCone, ray: Ray) -> bool:
    """Ray invariants: inside the cone, primitive, incidence of rank D - 1."""
    if not any(ray.direction) or not cone.contains(ray.direction):
        return False
    if linalg.content(ray.direction) != 1:
        return False
    inc = cone.incidence(ray.direction)
    if tuple(inc) != tuple(ray.incidence):
        return False
    return linalg.rank([cone.facets[i] for i in inc]) == cone.ambient_dim - 1


def dual_description(cone: HCone, order: str = "maxcutoff") -> list[Ray]:
    """All extreme rays of a pointed cone by incremental double description.

    ``order`` picks the next inequality: ``"maxcutoff"`` takes the one
    violated by the most current rays, ``"index"`` processes input order.
    """
    D = cone.ambient_dim
    F = cone.facets
    if linalg.rank(F) < D:
        raise NotPointedError(linalg.nullspace(F, ncols=D)[0])
    basis: list[int] = []
    for i, f in enumerate(F):
        if linalg.rank([F[j] for j in basis] + [f]) > len(basis):
            basis.append(i)
            if len(basis) == D:
                break
    inv = linalg.inverse([F[i] for i in basis])
    rays: list[tuple[tuple[int, ...], int]] = []
    for j in range(D):
        v = linalg.primitive([inv[k][j] for k in range(D)])
        mask = 0
        for k, i in enumerate(basis):
            if k != j:
                mask |= 1 << i
        rays.append((v, mask))
    remaining = [i for i in range(len(F)) if i not in set(basis)]
    need = D - 2

    while remaining:
        if order == "maxcutoff":
            best_i, best_neg = remaining[0], -1
            for i in remaining:
                f = F[i]
                neg = 0
                for v, _ in rays:
                    if sum(a * b for a, b in zip(f, v)) < 0:
                        neg += 1
                if neg > best_neg:
                    best_i, best_neg = i, neg
            i = best_i
        else:
            i = remaining[0]
        remaining.remove(i)
        f = F[i]
        bit = 1 << i
        pos, zero, neg = [], [], []
        for v, mask in rays:
            val = sum(a * b for a, b in zip(f, v))
            if val > 0:
                pos.append((v, mask, val))
            elif val < 0:
                neg.append((v, mask, val))
            else:
                zero.append((v, mask | bit))
        if not neg:
            rays = [(v, m) for v, m, _ in pos] + zero
            continue
        masks = [m for _, m in rays]
        new = []
        for vp, mp, fp in pos:
            for vn, mn, fn in neg:
                common = mp & mn
                if _popcount(common) < need:
                    continue
                adjacent = True
                for m in masks:
                    if m & common == common and m != mp and m != mn:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                w = linalg.primitive([fp * b - fn * a for a, b in zip(vp, vn)])
                new.append((w, common | bit))
        rays = [(v, m) for v, m, _ in pos] + zero + new
        if not rays:
            break

    out = [Ray.of(cone, v) for v, _ in rays]
    return sorted(set(out))


def facets_of_rays(rays: Iterable[Sequence[int]], D: int) -> list[tuple[int, ...]]:
    """Facet functionals of the cone generated by ``rays`` (needs full dimension)."""
    dual = HCone(D, tuple(linalg.primitive(r) for r in rays))
    return [r.direction for r in dual_description(dual)]


def initial_ray(cone: HCone) -> Ray:
    """One extreme ray, deterministic: maximize a lexicographically weighted objective."""
    D = cone.ambient_dim
    F = cone.facets
    if linalg.rank(F) < D:
        raise NotPointedError(linalg.nullspace(F, ncols=D)[0])
    norm = [sum(f[k] for f in F) for k in range(D)]
    delta = Fraction(1, 1 << 20)
    weights = [delta**k for k in range(D)]
    res = rational_lp(
        weights,
        A_ub=[[-x for x in f] for f in F],
        b_ub=[0] * len(F),
        A_eq=[norm],
        b_eq=[1],
    )
    if res.status != OPTIMAL:
        raise ConeError("cone is empty")
    ray = Ray.of(cone, res.x)
    if check_ray(cone, ray):
        return ray
    # degenerate optimum: fall back to a full enumeration
    return dual_description(cone)[0]


def is_full_dimensional(cone: HCone) -> bool:
    """True when some point satisfies every inequality strictly."""
    D = cone.ambient_dim
    F = cone.facets
    # maximize t subject to f(x) >= t, sum f(x) <= 1
    res = rational_lp(
        [0] * D + [1],
        A_ub=[[-x for x in f] + [1] for f in F] + [[sum(f[k] for f in F) for k in range(D)] + [0]],
        b_ub=[0] * len(F) + [1],
    )
    return res.status != OPTIMAL or res.value > 0
