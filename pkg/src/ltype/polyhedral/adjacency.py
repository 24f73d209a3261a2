"""Adjacency decomposition: orbit-wise extreme ray enumeration under symmetry."""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import networkx as nx

from ..exact import linalg
from .cones import ConeError, HCone, Ray, check_ray, dual_description, initial_ray

log = logging.getLogger(__name__)

DEFAULT_RECURSION_THRESHOLD = 40


class SymmetryError(ConeError):
    pass


class SymmetryAction:
    """Linear maps ``x -> M x`` of the ambient space that permute the facets."""

    def __init__(self, cone: HCone, generators: Iterable[Sequence[Sequence[int]]] = ()):
        self.cone = cone
        self.generators = [tuple(tuple(int(x) for x in row) for row in g) for g in generators]
        index = {f: i for i, f in enumerate(cone.facets)}
        self.facet_perms: list[tuple[int, ...]] = []
        for g in self.generators:
            if len(g) != cone.ambient_dim or any(len(r) != cone.ambient_dim for r in g):
                raise SymmetryError("generator has the wrong size")
            # x in C  <=>  g x in C  <=>  f(g x) >= 0 for all f
            perm = []
            for f in cone.facets:
                img = linalg.primitive(linalg.matvec(linalg.transpose(g), f))
                if img not in index:
                    raise SymmetryError("generator does not stabilize the cone")
                perm.append(index[img])
            if len(set(perm)) != len(perm):
                raise SymmetryError("generator does not permute the facets")
            self.facet_perms.append(tuple(perm))

    @classmethod
    def trivial(cls, cone: HCone) -> "SymmetryAction":
        return cls(cone, ())

    def orbit(self, v: tuple[int, ...]) -> set[tuple[int, ...]]:
        seen = {v}
        todo = [v]
        gens = self.generators
        while todo:
            w = todo.pop()
            for g in gens:
                u = tuple(sum(a * b for a, b in zip(row, w)) for row in g)
                if u not in seen:
                    seen.add(u)
                    todo.append(u)
        return seen

    def canonical(self, v: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
        """Lex-min representative of the orbit of ``v`` and the orbit size."""
        orb = self.orbit(v)
        return min(orb), len(orb)


@dataclass
class Orbit:
    representative: tuple[int, ...]
    size: int
    incidence: int
    treated: bool = False


@dataclass
class OrbitRegistry:
    ambient_dim: int
    orbits: list[Orbit] = field(default_factory=list)
    complete: bool = False

    def __post_init__(self):
        self._index = {o.representative: k for k, o in enumerate(self.orbits)}

    def add(self, rep: tuple[int, ...], size: int, incidence: int) -> bool:
        if rep in self._index:
            return False
        self._index[rep] = len(self.orbits)
        self.orbits.append(Orbit(rep, size, incidence))
        return True

    def __contains__(self, rep) -> bool:
        return rep in self._index

    @property
    def total(self) -> int:
        return sum(o.size for o in self.orbits)

    def untreated(self) -> list[Orbit]:
        return [o for o in self.orbits if not o.treated]

    def expand(self, action: SymmetryAction) -> list[tuple[int, ...]]:
        out: set[tuple[int, ...]] = set()
        for o in self.orbits:
            out |= action.orbit(o.representative)
        return sorted(out)

    def canonical_order(self) -> None:
        self.orbits.sort(key=lambda o: (o.incidence, o.representative))
        self._index = {o.representative: k for k, o in enumerate(self.orbits)}

    def to_json(self) -> dict:
        return {
            "schema": "ltype.registry/1",
            "ambient_dim": self.ambient_dim,
            "complete": self.complete,
            "orbits": [
                {"representative": list(o.representative), "size": o.size, "incidence": o.incidence, "treated": o.treated}
                for o in self.orbits
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "OrbitRegistry":
        orbits = [
            Orbit(tuple(o["representative"]), int(o["size"]), int(o["incidence"]), bool(o["treated"]))
            for o in data["orbits"]
        ]
        return cls(int(data["ambient_dim"]), orbits, bool(data.get("complete", False)))


def write_json_atomic(path, payload: dict) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    with os.fdopen(fd, "w") as fh:
        json.dump(payload, fh, separators=(",", ":"), sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def adjacent_rays(
    cone: HCone,
    ray: Ray,
    threshold: int = DEFAULT_RECURSION_THRESHOLD,
) -> list[Ray]:
    """Extreme rays sharing a 2-face with ``ray``.

    The cone is projected along the ray; every extreme ray of the projection
    spans, together with ``ray``, a 2-face whose second extreme ray is found
    by a two-variable linear program (solved in closed form).
    """
    if not check_ray(cone, ray):
        raise ConeError(f"{list(ray.direction)} is not an extreme ray")
    e = ray.direction
    F = cone.facets
    inc = set(ray.incidence)
    k = next(i for i, x in enumerate(e) if x)
    proj = HCone(cone.ambient_dim - 1, tuple(F[i][:k] + F[i][k + 1 :] for i in sorted(inc)))
    if len(proj.facets) > threshold and proj.ambient_dim > 2:
        sub = adjacency_decomposition(proj, SymmetryAction.trivial(proj), threshold=threshold)
        proj_rays = sub.expand(SymmetryAction.trivial(proj))
    else:
        proj_rays = [r.direction for r in dual_description(proj)]
    others = [F[j] for j in range(len(F)) if j not in inc]
    fe = [linalg.dot(f, e) for f in others]
    out = set()
    for y in proj_rays:
        lifted = y[:k] + (0,) + y[k:]
        alpha = max(Fraction(-linalg.dot(f, lifted), v) for f, v in zip(others, fe))
        w = [alpha * a + b for a, b in zip(e, lifted)]
        out.add(Ray.of(cone, w))
    return sorted(out)


def adjacency_decomposition(
    cone: HCone,
    action: SymmetryAction | None = None,
    registry: OrbitRegistry | None = None,
    strict_balinski: bool = False,
    threshold: int = DEFAULT_RECURSION_THRESHOLD,
    snapshot: str | None = None,
    on_orbit: Callable[[OrbitRegistry], None] | None = None,
) -> OrbitRegistry:
    """Orbits of extreme rays, treating one representative per orbit.

    Stops once the rays in untreated orbits number at most ``D - 2`` (fewer
    than ``D - 2`` with ``strict_balinski``): by Balinski's theorem such a
    set cannot disconnect the ridge graph, so no ray is left undiscovered.
    Passing a ``registry`` resumes from it.
    """
    if action is None:
        action = SymmetryAction.trivial(cone)
    elif action.cone.facets != cone.facets:
        action = SymmetryAction(cone, action.generators)
    D = cone.ambient_dim
    if registry is None:
        registry = OrbitRegistry(D)
    if not registry.orbits:
        first = initial_ray(cone)
        rep, size = action.canonical(first.direction)
        registry.add(rep, size, len(first.incidence))

    limit = D - 2
    while True:
        pending = registry.untreated()
        if not pending:
            break
        left = sum(o.size for o in pending)
        # the argument needs a treated orbit whose neighbours are all known
        started = len(pending) < len(registry.orbits)
        if started and ((left < limit) if strict_balinski else (left <= limit)):
            log.debug("Balinski stop with %d untreated rays", left)
            break
        orbit = min(pending, key=lambda o: (o.incidence, o.representative))
        for nb in adjacent_rays(cone, Ray.of(cone, orbit.representative), threshold=threshold):
            rep, size = action.canonical(nb.direction)
            registry.add(rep, size, len(nb.incidence))
        orbit.treated = True
        if snapshot:
            write_json_atomic(snapshot, registry.to_json())
        if on_orbit:
            on_orbit(registry)
    registry.complete = True
    registry.canonical_order()
    if snapshot:
        write_json_atomic(snapshot, registry.to_json())
    return registry


def skeleton_graph(cone: HCone) -> nx.Graph:
    """Ridge graph: extreme rays joined when they span a 2-face."""
    rays = dual_description(cone)
    masks = []
    for r in rays:
        m = 0
        for i in r.incidence:
            m |= 1 << i
        masks.append(m)
    G = nx.Graph()
    for k, r in enumerate(rays):
        G.add_node(k, direction=r.direction)
    for a in range(len(rays)):
        for b in range(a + 1, len(rays)):
            common = masks[a] & masks[b]
            if not any(m & common == common for c, m in enumerate(masks) if c != a and c != b):
                G.add_edge(a, b)
    return G
