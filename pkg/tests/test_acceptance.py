"""Acceptance criteria, one test per criterion.

Each test records a ``PASS`` or ``FAIL`` line that is printed in the pytest
terminal summary.  The dimension 5 census runs from scratch unless
``LTYPE_STATE5`` names a saved complete state file (``ltype enumerate --dim 5``).
"""

import itertools
import json
import os
import random
import subprocess
import sys
import time
from fractions import Fraction

import networkx as nx
import pytest

from ltype.census import (
    PAPER_TABLES_5,
    CensusState,
    all_domain_rays,
    distribution_tables,
    enumerate_domains,
    rigid_census,
    tree_check,
    verify_dim6_forms,
)
from ltype.data import D4
from ltype.delone import delone_star, dv_polytope, minkowski_sum
from ltype.exact import linalg
from ltype.exact.forms import QuadForm
from ltype.exact.isometry import isometry
from ltype.polyhedral.adjacency import OrbitRegistry, SymmetryAction, adjacency_decomposition, skeleton_graph
from ltype.polyhedral.cones import HCone, dual_description, facets_of_rays
from ltype.secondary import rigidity_degree, secondary_cone

from conftest import ACCEPTANCE_LINES
from oracles import random_unimodular, subset_rays


def record(n, ok, detail, seconds):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail} ({seconds:.1f} s)")


@pytest.fixture(scope="module")
def census5():
    path = os.environ.get("LTYPE_STATE5")
    t = time.time()
    if path and os.path.exists(path):
        state = CensusState.load(path)
    else:
        state = enumerate_domains(5)
    all_domain_rays(state, threads=os.cpu_count() or 1)
    return state, time.time() - t


def test_criterion_1_dimension_one_forms_are_rigid():
    t = time.time()
    rng = random.Random(1)
    degrees = [rigidity_degree(QuadForm.from_rows([[Fraction(rng.randint(1, 99), rng.randint(1, 9))]])) for _ in range(20)]
    ok = degrees == [1] * 20
    record(1, ok, "20 random forms in dimension 1 have rigidity degree 1", time.time() - t)
    assert ok


def test_criterion_2_dimensions_two_and_three():
    t = time.time()
    found = {}
    for d in (2, 3):
        st = enumerate_domains(d)
        all_domain_rays(st)
        found[d] = (len(st.domains), len(rigid_census(st)))
    ok = found == {2: (1, 0), 3: (1, 0)}
    record(2, ok, f"(domains, rigid forms) by dimension: {found}", time.time() - t)
    assert ok


def test_criterion_3_dimension_four():
    t = time.time()
    st = enumerate_domains(4)
    all_domain_rays(st)
    shapes = [(len(dom.cone.facets), dom.registry.total) for dom in st.domains]
    forms = rigid_census(st)
    P = dv_polytope(forms[0]) if forms else None
    checks = {
        "three domains": len(st.domains) == 3,
        "simplicial": shapes == [(10, 10)] * 3,
        "one rigid form": len(forms) == 1,
        "isometric to D4": bool(forms) and isometry(forms[0], D4) is not None,
        "24-cell": P is not None and len(P.vertices) == 24 and len(P.facets()) == 24,
    }
    ok = all(checks.values())
    record(3, ok, ", ".join(f"{k}: {v}" for k, v in checks.items()), time.time() - t)
    assert ok


# The printed ray-count table puts six domains at 21 rays; the printed rank
# tables (which this census matches) force 22 for them: summing n times the
# count over the rank tables gives 3760 rays, the ray-count table 3754.
L2_REASON = "published L2 table has 6 domains at 21 rays; exact DD and the published rank tables give 22"
L2_CELLS = {("L2", 21), ("L2", 22)}


@pytest.mark.slow
def test_criterion_4_dimension_five(census5):
    state, elapsed = census5
    t = time.time()
    tables = distribution_tables(state)
    bad = [
        (name, n)
        for name, rows in PAPER_TABLES_5.items()
        for n, c in rows.items()
        if tables[name].get(n, 0) != c
    ]
    forms = rigid_census(state)
    low_rank = [k for k in (2, 3) if any(n and c for n, c in tables[f"R{k}"].items())]
    ok = len(state.domains) == 222 and not bad and len(forms) == 7 and not low_rank
    shown = ", ".join(f"{name}({n})={tables[name].get(n, 0)} vs {PAPER_TABLES_5[name][n]}" for name, n in bad)
    detail = f"{len(state.domains)} domains, {len(forms)} rigid forms, table mismatches: {shown or 'none'}"
    record(4, ok, detail, elapsed + time.time() - t)
    assert len(state.domains) == 222 and len(forms) == 7 and not low_rank
    assert set(bad) <= L2_CELLS
    if bad:
        pytest.xfail(L2_REASON)


@pytest.mark.slow
def test_criterion_5_tree_property(census5):
    t = time.time()
    reports = {}
    for d in (2, 3, 4):
        st = enumerate_domains(d)
        all_domain_rays(st)
        reports[d] = tree_check(st)
    reports[5] = tree_check(census5[0])
    ok = all(r.passed for r in reports.values())
    detail = "; ".join(f"d={d}: {r.ridges} ridges, {len(r.failures)} failures" for d, r in reports.items())
    record(5, ok, detail, time.time() - t)
    assert ok


# The published sixth form has rigidity degree 5 on its definite block; the
# computation is exact, so this sub-check fails honestly and is an expected
# failure rather than a green test.
BLOCK_REASON = "R2 block has rigidity degree 5, not 1 (exact computation disagrees with the published claim)"


@pytest.mark.slow
def test_criterion_6_dimension_six_forms():
    t = time.time()
    results = verify_dim6_forms()
    by_name = {r.name: r for r in results}
    core = ["E6* rigid", "R1 rigid", "R2 rank 5"]
    ok = all(by_name[n].passed for n in core) and by_name["R2 block rigid"].passed
    detail = "; ".join(f"{r.name}: {'ok' if r.passed else 'NO'} ({r.detail})" for r in results)
    record(6, ok, detail, time.time() - t)
    assert all(by_name[n].passed for n in core)
    if not by_name["R2 block rigid"].passed:
        pytest.xfail(BLOCK_REASON)


def _random_pointed_cone(rng):
    while True:
        D = rng.randint(2, 6)
        n = rng.randint(D, D + 6)
        rays = [tuple([rng.randint(1, 4)] + [rng.randint(-3, 3) for _ in range(D - 1)]) for _ in range(n)]
        if linalg.rank(rays) < D:
            continue
        facets = facets_of_rays(rays, D)
        if len(facets) <= 12:
            return HCone(D, tuple(facets))


def _symmetric_cones():
    """Cones over cubes and cross-polytopes with subgroups of their symmetries."""
    out = []
    for n in (3, 4, 5):
        D = n + 1
        swaps = []
        for i in range(1, n):
            g = [list(r) for r in linalg.identity(D)]
            g[i][i] = g[i + 1][i + 1] = 0
            g[i][i + 1] = g[i + 1][i] = 1
            swaps.append(g)
        flip = [list(r) for r in linalg.identity(D)]
        flip[1][1] = -1
        cube = HCone(D, tuple(tuple([1] + [s if k == i else 0 for k in range(n)]) for i in range(n) for s in (1, -1)))
        cross = HCone(D, tuple(tuple([1] + list(signs)) for signs in itertools.product((1, -1), repeat=n)))
        for cone in (cube, cross):
            out.append((cone, swaps))
            out.append((cone, swaps + [flip]))
    return out


def test_criterion_7_engine_oracles():
    t = time.time()
    rng = random.Random(7)
    mismatches = 0
    for _ in range(200):
        cone = _random_pointed_cone(rng)
        rays = [r.direction for r in dual_description(cone)]
        if rays != subset_rays(cone.facets, cone.ambient_dim):
            mismatches += 1
            continue
        reg = adjacency_decomposition(cone)
        if reg.expand(SymmetryAction.trivial(cone)) != rays:
            mismatches += 1
    sym_bad = 0
    for cone, gens in _symmetric_cones():
        action = SymmetryAction(cone, gens)
        reg = adjacency_decomposition(cone, action)
        if reg.expand(action) != sorted(r.direction for r in dual_description(cone)):
            sym_bad += 1
    ok = mismatches == 0 and sym_bad == 0
    record(7, ok, f"200 random cones: {mismatches} mismatches; {len(_symmetric_cones())} symmetric cones: {sym_bad} mismatches", time.time() - t)
    assert ok


def test_criterion_8_balinski():
    t = time.time()
    rng = random.Random(8)
    cones = [_random_pointed_cone(rng) for _ in range(40)] + [c for c, _ in _symmetric_cones()]
    low = []
    checked = 0
    for cone in cones:
        G = skeleton_graph(cone)
        n = G.number_of_nodes()
        if n > 200:
            continue
        checked += 1
        need = min(cone.ambient_dim - 1, n - 1)
        if nx.node_connectivity(G) < need:
            low.append(cone)
    incomplete = 0
    for cone, gens in _symmetric_cones():
        action = SymmetryAction(cone, gens)
        full = sorted(r.direction for r in dual_description(cone))
        for strict in (False, True):
            reg = adjacency_decomposition(cone, action, strict_balinski=strict)
            if reg.expand(action) != full:
                incomplete += 1
    ok = not low and incomplete == 0
    record(8, ok, f"{checked} skeletons, {len(low)} below D-1 connectivity; {incomplete} incomplete early-stopped runs", time.time() - t)
    assert ok


def _domain_rays(Q):
    cone = secondary_cone(delone_star(Q))
    if cone.rays is not None:
        return [QuadForm.from_vector(Q.dim, r) for r in cone.rays]
    return [Q]


def test_criterion_9_dv_additivity():
    t = time.time()
    rng = random.Random(9)
    bases = {d: _domain_rays(QuadForm.from_rows([[d if i == j else -1 for j in range(d)] for i in range(d)])) for d in (2, 3)}
    failures = 0
    for trial in range(100):
        d = 2 if trial % 2 == 0 else 3
        U = random_unimodular(rng, d)
        rays = [R.transform(U) for R in bases[d]]

        def point():
            Q = QuadForm.zero(d)
            for R in rays:
                c = rng.choice((0, 0, 1, 2, 3))
                Q = Q + R.scale(c)
            return Q

        Q1, Q2 = point(), point()
        a = Fraction(rng.randint(0, 5), rng.randint(1, 4))
        b = Fraction(rng.randint(0, 5), rng.randint(1, 4))
        lhs = dv_polytope(Q1.scale(a) + Q2.scale(b))
        rhs = minkowski_sum(dv_polytope(Q1).scale(a), dv_polytope(Q2).scale(b))
        if lhs != rhs:
            failures += 1
    ok = failures == 0
    record(9, ok, f"100 pairs in a common closed domain, {failures} failures", time.time() - t)
    assert ok


def _cube_file(path, n):
    D = n + 1
    facets = [[1] + [s if k == i else 0 for k in range(n)] for i in range(n) for s in (1, -1)]
    swaps = []
    for i in range(1, n):
        g = [list(r) for r in linalg.identity(D)]
        g[i][i] = g[i + 1][i + 1] = 0
        g[i][i + 1] = g[i + 1][i] = 1
        swaps.append(g)
    path.write_text(json.dumps({"ambient_dim": D, "facets": facets, "group": swaps}))


def test_criterion_10_external_cone_files(tmp_path):
    t = time.time()
    n = 9
    cone_file = tmp_path / "cube.json"
    _cube_file(cone_file, n)
    data = json.loads(cone_file.read_text())
    cone = HCone(data["ambient_dim"], tuple(map(tuple, data["facets"])))
    action = SymmetryAction(cone, data["group"])
    snap = tmp_path / "snap.json"

    class Interrupt(Exception):
        pass

    def stop(reg):
        if sum(o.treated for o in reg.orbits) == 3:
            raise Interrupt

    with pytest.raises(Interrupt):
        adjacency_decomposition(cone, action, snapshot=str(snap), on_orbit=stop)
    partial = OrbitRegistry.from_json(json.loads(snap.read_text()))
    out = tmp_path / "resumed.json"
    cmd = [sys.executable, "-m", "ltype.cli", "dd", "--cone", str(cone_file), "--adjacency-decomposition", "--snapshot", str(snap), "--resume", "--out", str(out)]
    res = subprocess.run(cmd, capture_output=True, text=True)
    fresh = tmp_path / "fresh.json"
    res2 = subprocess.run(cmd[:-5] + ["--out", str(fresh)], capture_output=True, text=True)
    resumed = json.loads(out.read_text()) if out.exists() else None
    ok = (
        res.returncode == 0
        and res2.returncode == 0
        and "resuming with" in res.stdout
        and not partial.complete
        and resumed == json.loads(fresh.read_text())
        and sum(o["size"] for o in resumed["orbits"]) == 2**n
        and len(resumed["orbits"]) == n + 1
    )
    detail = f"cube cone file with {2 ** n} rays in {n + 1} orbits, interrupted after 3 orbits and resumed from the snapshot"
    record(10, ok, detail + "; the large published cones are documented targets only", time.time() - t)
    assert ok
