"""Enumeration of primitive L-type domains and what is read off from them."""

from __future__ import annotations

import gzip
import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

from .data import E6_DUAL, R1, R2, dual_a
from .delone import DeloneStar, delone_star, dv_polytope, minkowski_sum
from .exact import linalg
from .exact.forms import FormError, QuadForm, UnimodularMap, form_action_matrix, form_dim, kernel_split
from .exact.isometry import automorphisms, form_invariants, isometry
from .polyhedral.adjacency import OrbitRegistry, SymmetryAction, adjacency_decomposition, write_json_atomic
from .polyhedral.cones import HCone
from .secondary import (
    SecondaryCone,
    _facet_is_degenerate,
    class_characteristic_form,
    class_equivalences,
    cone_of_classes,
    flip_classes,
    ray_sum_witness,
    rigidity_degree,
    secondary_cone,
)

log = logging.getLogger(__name__)

SCHEMA = "ltype.census/1"


class CensusError(RuntimeError):
    pass


def principal_form(d: int) -> QuadForm:
    """Voronoi's principal form of the first kind, ``(d + 1) I - J``."""
    if d < 1:
        raise FormError("dimension must be positive")
    return dual_a(d)


def act_on_functional(h: Sequence[Sequence[int]], F: Sequence[int]) -> tuple[int, ...]:
    """``F -> h F h^t``, so that ``(h . F)(Q) = F(h^t Q h)``."""
    d = len(h)
    M = QuadForm.from_vector(d, F).transform(linalg.transpose(h))
    return tuple(int(x) for x in M.to_vector())


def facet_orbits(facets: Sequence[tuple[int, ...]], generators: Sequence[Sequence[Sequence[int]]]) -> list[list[tuple[int, tuple]]]:
    """Orbits of facet functionals; each member is ``(index, h)`` with ``facet = h . representative``."""
    index = {f: i for i, f in enumerate(facets)}
    d = len(generators[0]) if generators else 0
    seen: set[int] = set()
    out = []
    for i, f in enumerate(facets):
        if i in seen:
            continue
        ident = linalg.identity(d) if d else ()
        members = [(i, ident)]
        seen.add(i)
        k = 0
        while k < len(members):
            j, h = members[k]
            k += 1
            for g in generators:
                img = act_on_functional(g, facets[j])
                if img not in index:
                    raise CensusError("automorphism does not permute the facets")
                t = index[img]
                if t not in seen:
                    seen.add(t)
                    members.append((t, tuple(map(tuple, linalg.matmul(g, h)))))
        out.append(members)
    return out


def form_rank(vec: Sequence[int], d: int) -> int:
    return linalg.rank(QuadForm.from_vector(d, vec).entries)


@dataclass
class DomainRecord:
    id: int
    dim: int
    classes: tuple[tuple[tuple[int, ...], ...], ...]
    witness: QuadForm
    cone: SecondaryCone
    aut_generators: list[UnimodularMap]
    aut_order: int
    neighbors: list[dict] | None = None
    processed: bool = False
    registry: OrbitRegistry | None = None
    rank_profile: dict[int, int] | None = None

    @cached_property
    def star(self) -> DeloneStar:
        return DeloneStar.from_classes(self.witness, self.classes, certify=False)

    @cached_property
    def characteristic(self) -> QuadForm:
        return class_characteristic_form(self.dim, self.classes)

    @property
    def key(self) -> tuple:
        profile = tuple(sorted(Counter(len(c) for c in self.classes).items()))
        return (len(self.cone.facets), profile, self.aut_order)

    @property
    def ray_count(self) -> int | None:
        return self.registry.total if self.registry is not None else None

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "classes": [[list(v) for v in c] for c in self.classes],
            "witness": self.witness.to_json(),
            "facets": [list(f) for f in self.cone.facets],
            "rays": [list(r) for r in self.cone.rays or ()],
            "aut": {"order": self.aut_order, "generators": [g.to_json() for g in self.aut_generators]},
            "processed": self.processed,
        }
        if self.neighbors is not None:
            out["neighbors"] = self.neighbors
        if self.registry is not None:
            out["registry"] = self.registry.to_json()
        if self.rank_profile is not None:
            out["rank_profile"] = {str(k): v for k, v in sorted(self.rank_profile.items())}
        return out

    @classmethod
    def from_json(cls, data: dict, d: int) -> "DomainRecord":
        witness = QuadForm.from_json(data["witness"])
        cone = SecondaryCone(
            d,
            (),
            tuple(tuple(f) for f in data["facets"]),
            witness,
            tuple(tuple(r) for r in data["rays"]) or None,
        )
        return cls(
            id=int(data["id"]),
            dim=d,
            classes=tuple(tuple(tuple(v) for v in c) for c in data["classes"]),
            witness=witness,
            cone=cone,
            aut_generators=[UnimodularMap(tuple(map(tuple, g))) for g in data["aut"]["generators"]],
            aut_order=int(data["aut"]["order"]),
            neighbors=data.get("neighbors"),
            processed=bool(data.get("processed", False)),
            registry=OrbitRegistry.from_json(data["registry"]) if "registry" in data else None,
            rank_profile={int(k): int(v) for k, v in data["rank_profile"].items()} if "rank_profile" in data else None,
        )


@dataclass
class CensusState:
    dim: int
    domains: list[DomainRecord] = field(default_factory=list)
    complete: bool = False

    @property
    def frontier(self) -> list[int]:
        return [dom.id for dom in self.domains if not dom.processed]

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "dim": self.dim,
            "complete": self.complete,
            "domains": [dom.to_json() for dom in self.domains],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CensusState":
        if data.get("schema") != SCHEMA:
            raise CensusError(f"unknown census schema {data.get('schema')!r}")
        d = int(data["dim"])
        return cls(d, [DomainRecord.from_json(x, d) for x in data["domains"]], bool(data.get("complete", False)))

    def save(self, path) -> None:
        payload = self.to_json()
        if str(path).endswith(".gz"):
            directory = os.path.dirname(os.path.abspath(path))
            tmp = os.path.join(directory, f".tmp-{os.getpid()}-{os.path.basename(path)}")
            # no name and a fixed mtime keep the compressed bytes reproducible
            with open(tmp, "wb") as raw, gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as fh:
                fh.write((json.dumps(payload, separators=(",", ":"), sort_keys=True) + "\n").encode())
            os.replace(tmp, path)
        else:
            write_json_atomic(path, payload)

    @classmethod
    def load(cls, path) -> "CensusState":
        opener = gzip.open if str(path).endswith(".gz") else open
        with opener(path, "rt") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise CensusError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        return cls.from_json(data)


def _make_domain(id_: int, d: int, classes, cone: SecondaryCone, certify: bool = True) -> DomainRecord:
    witness = ray_sum_witness(cone)
    if certify:
        DeloneStar.from_classes(witness, classes, certify=True)
    cone = SecondaryCone(d, (), cone.facets, witness, cone.rays)
    gens, order = automorphisms(witness)
    return DomainRecord(id_, d, tuple(classes), witness, cone, gens, order)


def _seed(d: int) -> DomainRecord:
    star = delone_star(principal_form(d))
    cone = secondary_cone(star)
    if cone.equalities:
        raise CensusError("principal form does not lie in a primitive domain")
    return _make_domain(0, d, star.classes, cone)


def _facet_index(facets: Sequence[tuple[int, ...]], F: tuple[int, ...]) -> int:
    try:
        return facets.index(F)
    except ValueError:
        raise CensusError("neighbour link does not match a facet") from None


def _process(state: CensusState, dom: DomainRecord, max_domains: int | None) -> bool:
    """Fill the neighbour links of ``dom``; False when the domain cap stops it."""
    d = state.dim
    facets = list(dom.cone.facets)
    gens = [g.entries for g in dom.aut_generators]
    links: list[dict | None] = [None] * len(facets)
    by_key: dict[tuple, list[DomainRecord]] = {}
    for other in state.domains:
        by_key.setdefault(other.key, []).append(other)
    for members in facet_orbits(facets, gens):
        rep, _ = members[0]
        F = facets[rep]
        if _facet_is_degenerate(dom.cone, F):
            for idx, _ in members:
                links[idx] = {"facet": idx, "degenerate": True}
            continue
        classes = flip_classes(d, dom.classes, F, dom.cone)
        ncone = cone_of_classes(d, classes)
        if ncone.equalities:
            raise CensusError("flip left the primitive domains")
        witness = ray_sum_witness(ncone)
        _, order = automorphisms(witness)
        profile = tuple(sorted(Counter(len(c) for c in classes).items()))
        key = (len(ncone.facets), profile, order)
        found = None
        X = class_characteristic_form(d, classes)
        for cand in by_key.get(key, []):
            U = next(class_equivalences(d, classes, cand.classes, X, cand.characteristic), None)
            if U is not None:
                found = (cand, U)
                break
        if found is None:
            if max_domains is not None and len(state.domains) >= max_domains:
                return False
            new = _make_domain(len(state.domains), d, classes, ncone)
            state.domains.append(new)
            by_key.setdefault(new.key, []).append(new)
            log.info("domain %d: %d facets, aut order %d", new.id, len(new.cone.facets), new.aut_order)
            found = (new, UnimodularMap(linalg.identity(d)))
        target, U = found
        tfacets = list(target.cone.facets)
        for idx, h in members:
            Uh = UnimodularMap(tuple(map(tuple, linalg.matmul(h, U.entries))))
            back = act_on_functional(Uh.inverse().entries, tuple(-x for x in facets[idx]))
            links[idx] = {
                "facet": idx,
                "domain": target.id,
                "map": Uh.to_json(),
                "matched": _facet_index(tfacets, back),
            }
    dom.neighbors = links
    dom.processed = True
    return True


def enumerate_domains(
    d: int,
    max_domains: int | None = None,
    state: CensusState | None = None,
    snapshot: str | None = None,
    on_domain: Callable[[CensusState], None] | None = None,
) -> CensusState:
    """Breadth-first traversal of the primitive domains from the principal one.

    ``state`` resumes a previous run.  With ``max_domains`` the traversal
    stops before creating more domains and the state is marked incomplete.
    """
    if d >= 6 and max_domains is None:
        raise CensusError("dimension 6 and above needs an explicit domain cap")
    if state is None:
        state = CensusState(d)
    if state.dim != d:
        raise CensusError("state belongs to another dimension")
    if not state.domains:
        state.domains.append(_seed(d))
    state.complete = False
    while True:
        pending = state.frontier
        if not pending:
            state.complete = True
            break
        dom = state.domains[pending[0]]
        if not _process(state, dom, max_domains):
            break
        if snapshot:
            state.save(snapshot)
        if on_domain:
            on_domain(state)
    if snapshot:
        state.save(snapshot)
    return state


def domain_action(dom: DomainRecord) -> tuple[HCone, SymmetryAction]:
    cone = HCone(form_dim(dom.dim), tuple(dom.cone.linear_facets()), irredundant=True)
    gens = [tuple(map(tuple, form_action_matrix(g.entries))) for g in dom.aut_generators]
    return cone, SymmetryAction(cone, gens)


def domain_rays(state: CensusState, id_: int, strict_balinski: bool = False) -> OrbitRegistry:
    """Extreme ray orbits of one domain under its automorphism group, with the rank profile."""
    dom = state.domains[id_]
    cone, action = domain_action(dom)
    registry = adjacency_decomposition(cone, action, strict_balinski=strict_balinski)
    profile: Counter = Counter()
    for orbit in registry.orbits:
        profile[form_rank(orbit.representative, dom.dim)] += orbit.size
    dom.registry = registry
    dom.rank_profile = dict(sorted(profile.items()))
    return registry


def _rays_task(args):
    data, d, strict = args
    st = CensusState(d, [DomainRecord.from_json(data, d)])
    st.domains[0].id = 0
    reg = domain_rays(st, 0, strict)
    return reg.to_json(), st.domains[0].rank_profile


def all_domain_rays(state: CensusState, strict_balinski: bool = False, threads: int = 1) -> None:
    todo = [dom for dom in state.domains if dom.registry is None]
    if threads > 1 and len(todo) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = pool.map(_rays_task, [(dom.to_json(), state.dim, strict_balinski) for dom in todo])
            for dom, (reg, profile) in zip(todo, results):
                dom.registry = OrbitRegistry.from_json(reg)
                dom.rank_profile = profile
    else:
        for dom in todo:
            domain_rays(state, dom.id, strict_balinski)


def _require_rays(state: CensusState) -> None:
    if not state.complete:
        raise CensusError("census is incomplete")
    if any(dom.registry is None for dom in state.domains):
        all_domain_rays(state)


def rigid_census(state: CensusState) -> list[QuadForm]:
    """Positive definite extreme rays of all domains, one per arithmetic class."""
    _require_rays(state)
    d = state.dim
    buckets: dict[tuple, list[QuadForm]] = {}
    out: list[QuadForm] = []
    for dom in state.domains:
        for orbit in dom.registry.orbits:
            if form_rank(orbit.representative, d) != d:
                continue
            Q = QuadForm.from_vector(d, orbit.representative)
            inv = form_invariants(Q)
            known = buckets.setdefault(inv, [])
            if any(isometry(Q, P) is not None for P in known):
                continue
            if rigidity_degree(Q) != 1:
                raise CensusError(f"extreme ray {Q} is not rigid")
            known.append(Q)
            out.append(Q)
    return out


PAPER_TABLES_5 = {
    "L1": dict(zip(range(15, 28), [62, 61, 46, 17, 10, 15, 6, 0, 1, 3, 0, 0, 1])),
    "L2": dict(zip(range(15, 27), [62, 84, 13, 5, 33, 13, 6, 0, 0, 0, 0, 6])),
    "R1": dict(zip(range(0, 17), [0] * 10 + [135, 58, 24, 3, 1, 1, 0])),
    "R4": dict(zip(range(0, 17), [55, 49, 92, 19, 0, 7] + [0] * 11)),
    "R5": dict(zip(range(0, 17), [2, 12, 29, 38, 56, 14, 13, 17, 17, 8, 4, 0, 6, 0, 0, 0, 6])),
}


def distribution_tables(state: CensusState) -> dict[str, dict[int, int]]:
    """Histograms over domains: facet counts, ray counts, and rays of each rank."""
    _require_rays(state)
    d = state.dim
    tables: dict[str, Counter] = {"L1": Counter(), "L2": Counter()}
    for k in range(1, d + 1):
        tables[f"R{k}"] = Counter()
    for dom in state.domains:
        tables["L1"][len(dom.cone.facets)] += 1
        tables["L2"][dom.registry.total] += 1
        for k in range(1, d + 1):
            tables[f"R{k}"][dom.rank_profile.get(k, 0)] += 1
    out = {}
    for name, counts in tables.items():
        if name.startswith("R"):
            hi = max(max(counts), 16 if d == 5 else 0)
            out[name] = {n: counts.get(n, 0) for n in range(0, hi + 1)}
        else:
            lo, hi = min(counts), max(counts)
            if d == 5:
                lo, hi = min(lo, 15), max(hi, 27 if name == "L1" else 26)
            out[name] = {n: counts.get(n, 0) for n in range(lo, hi + 1)}
    return out


def tables_csv(tables: dict[str, dict[int, int]]) -> str:
    lines = ["table,n,count"]
    for name, rows in tables.items():
        lines += [f"{name},{n},{c}" for n, c in rows.items()]
    return "\n".join(lines) + "\n"


def tables_text(tables: dict[str, dict[int, int]]) -> str:
    out = []
    for name, rows in tables.items():
        ns = [str(n) for n in rows]
        cs = [str(c) for c in rows.values()]
        width = max(len(x) for x in ns + cs + ["n", name])
        out.append("n".rjust(len(name)) + " | " + " ".join(x.rjust(width) for x in ns))
        out.append(name + " | " + " ".join(x.rjust(width) for x in cs))
        out.append("")
    return "\n".join(out)


@dataclass
class RidgeReport:
    ridges: int = 0
    failures: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def ridge_check(d: int, facets: Sequence[Sequence[int]], rays: Sequence[Sequence[int]], report: RidgeReport | None = None, tag: int = 0) -> RidgeReport:
    """Check that every ridge of the cone has an extreme ray of rank below ``d``.

    ``facets`` are plain linear functionals on form space, ``rays`` the
    extreme rays.  A ridge is a pair of facets whose common rays span a
    space of dimension ``D - 2``.
    """
    report = report or RidgeReport()
    D = form_dim(d)
    degenerate = [form_rank(r, d) < d for r in rays]
    inc = [frozenset(k for k, r in enumerate(rays) if linalg.dot(f, r) == 0) for f in facets]
    for i in range(len(facets)):
        for j in range(i + 1, len(facets)):
            common = inc[i] & inc[j]
            if len(common) < D - 2:
                continue
            if linalg.rank([rays[k] for k in sorted(common)]) != D - 2:
                continue
            report.ridges += 1
            if not any(degenerate[k] for k in common):
                report.failures.append((tag, i, j))
    return report


def tree_check(state: CensusState) -> RidgeReport:
    _require_rays(state)
    report = RidgeReport()
    for dom in state.domains:
        _, action = domain_action(dom)
        rays = dom.registry.expand(action)
        ridge_check(state.dim, dom.cone.linear_facets(), rays, report, tag=dom.id)
    return report


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def verify_dim6_forms(samples: Sequence[Fraction] = (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4)), minkowski: bool = False) -> list[CheckResult]:
    """Rigidity and segment checks for the built-in six-dimensional forms."""
    out = []

    def check(name, fn):
        try:
            ok, detail = fn()
        except Exception as exc:  # reported, never raised
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, ok, detail))

    def rigid(Q):
        def run():
            r = rigidity_degree(Q)
            return r == 1, f"rigidity degree {r}"

        return run

    check("E6* rigid", rigid(E6_DUAL))
    check("R1 rigid", rigid(R1))

    def r2_rank():
        r = linalg.rank(R2.entries)
        return r == 5, f"rank {r}"

    check("R2 rank 5", r2_rank)

    def r2_block():
        _, block = kernel_split(R2)
        r = rigidity_degree(block)
        return r == 1, f"block rigidity degree {r}"

    check("R2 block rigid", r2_block)

    for label, R in (("R1", R1), ("R2", R2)):

        def segment(R=R):
            stars = [delone_star(E6_DUAL + R.scale(t)) for t in samples]
            same = all(s.same_subdivision(stars[0]) for s in stars[1:])
            return same, f"{len(stars[0].classes)} cell classes at t = {', '.join(str(t) for t in samples)}"

        check(f"E6* + t {label} constant", segment)

    if minkowski:

        def mink():
            lhs = dv_polytope(E6_DUAL + R2)
            rhs = minkowski_sum(dv_polytope(E6_DUAL), dv_polytope(R2))
            return lhs.vertices == rhs.vertices, f"{len(lhs.vertices)} vertices"

        check("DV(E6* + R2) = DV(E6*) + DV(R2)", mink)
    return out
