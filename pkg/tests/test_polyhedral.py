import json
import random
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from ltype.exact import linalg
from ltype.polyhedral.adjacency import (
    OrbitRegistry,
    SymmetryAction,
    SymmetryError,
    adjacency_decomposition,
    adjacent_rays,
    skeleton_graph,
)
from ltype.polyhedral.cones import (
    ConeError,
    HCone,
    NotPointedError,
    Ray,
    check_ray,
    dual_description,
    facets_of_rays,
    initial_ray,
    is_full_dimensional,
    load_cone,
)
from ltype.polyhedral.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, rational_lp

from oracles import lp_vertices_max, subset_rays


def cube_cone(n):
    """Homogenized n-cube: x0 >= |xi|."""
    facets = []
    for i in range(1, n + 1):
        for s in (1, -1):
            f = [0] * (n + 1)
            f[0], f[i] = 1, s
            facets.append(tuple(f))
    return HCone(n + 1, tuple(facets))


def cube_symmetries(n):
    gens = []
    for i in range(1, n):
        g = linalg.identity(n + 1)
        g = [list(r) for r in g]
        g[i][i] = g[i + 1][i + 1] = 0
        g[i][i + 1] = g[i + 1][i] = 1
        gens.append(g)
    g = [list(r) for r in linalg.identity(n + 1)]
    g[1][1] = -1
    gens.append(g)
    return gens


def cyclic_cone(n, d):
    """Cone over the cyclic polytope with n vertices on the moment curve in R^d."""
    rays = [tuple([1] + [t**k for k in range(1, d + 1)]) for t in range(n)]
    return rays, HCone(d + 1, tuple(facets_of_rays(rays, d + 1)))


def random_cone(rng, D, n):
    while True:
        rays = [[rng.randint(-3, 3) for _ in range(D - 1)] for _ in range(n)]
        rays = [tuple([4] + r) for r in rays]
        if linalg.rank(rays) == D:
            return rays, HCone(D, tuple(facets_of_rays(rays, D)))


def test_simplicial_cone():
    cone = HCone(3, ((1, 0, 0), (0, 1, 0), (0, 0, 1)))
    rays = dual_description(cone)
    assert [r.direction for r in rays] == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert all(check_ray(cone, r) for r in rays)


def test_cube_cone_counts():
    for n, rays in [(2, 4), (3, 8), (4, 16)]:
        assert len(dual_description(cube_cone(n))) == rays


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_dd_matches_subset_oracle(seed):
    rng = random.Random(seed)
    D = rng.randint(2, 4)
    _, cone = random_cone(rng, D, rng.randint(D, D + 4))
    got = [r.direction for r in dual_description(cone)]
    assert got == subset_rays(cone.facets, D)
    assert [r.direction for r in dual_description(cone, order="index")] == got


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_dd_recovers_generators(seed):
    rng = random.Random(seed)
    D = rng.randint(3, 4)
    gens, cone = random_cone(rng, D, rng.randint(D, D + 5))
    rays = {r.direction for r in dual_description(cone)}
    assert rays <= {linalg.primitive(g) for g in gens}
    # every generator is a nonnegative combination, so lies in the cone
    assert all(cone.contains(g) for g in gens)
    assert sorted(facets_of_rays(rays, D)) == sorted(cone.facets)


def test_cyclic_polytope_counts():
    # the cyclic 4-polytope with n vertices has n(n-3)/2 facets
    for n in (6, 7, 8):
        rays, cone = cyclic_cone(n, 4)
        assert len(cone.facets) == n * (n - 3) // 2
        assert sorted(r.direction for r in dual_description(cone)) == sorted(rays)


def test_not_pointed_and_empty():
    with pytest.raises(NotPointedError):
        initial_ray(HCone(2, ((1, 0),)))
    with pytest.raises(ConeError):
        HCone(2, ((0, 0),))
    assert is_full_dimensional(cube_cone(2))
    assert not is_full_dimensional(HCone(2, ((1, 0), (-1, 0), (0, 1))))


def test_cone_json_round_trip(tmp_path):
    cone = cube_cone(3)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cone.to_json(group=cube_symmetries(3))))
    back, group = load_cone(path)
    assert back == cone and len(group) == 3
    (tmp_path / "bad.json").write_text('{"ambient_dim": 2,')
    with pytest.raises(ConeError, match="line 1"):
        load_cone(tmp_path / "bad.json")
    (tmp_path / "bad2.json").write_text('{"facets": []}')
    with pytest.raises(ConeError):
        load_cone(tmp_path / "bad2.json")


def test_adjacent_rays_on_cube():
    cone = cube_cone(3)
    r = Ray.of(cone, (1, 1, 1, 1))
    nbrs = adjacent_rays(cone, r)
    assert {n.direction for n in nbrs} == {(1, -1, 1, 1), (1, 1, -1, 1), (1, 1, 1, -1)}
    with pytest.raises(ConeError):
        adjacent_rays(cone, Ray.of(cone, (1, 0, 0, 0)))


def test_skeleton_graph_of_cube_and_balinski():
    for n in (3, 4):
        G = skeleton_graph(cube_cone(n))
        assert G.number_of_nodes() == 2**n
        assert G.number_of_edges() == n * 2 ** (n - 1)
        assert nx.node_connectivity(G) >= n  # D - 1 with D = n + 1


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_skeleton_graph_matches_adjacent_rays(seed):
    rng = random.Random(seed)
    _, cone = random_cone(rng, 4, rng.randint(5, 8))
    G = skeleton_graph(cone)
    dirs = nx.get_node_attributes(G, "direction")
    index = {v: k for k, v in dirs.items()}
    for k, d in dirs.items():
        nbrs = {index[n.direction] for n in adjacent_rays(cone, Ray.of(cone, d))}
        assert nbrs == set(G.neighbors(k))
    assert nx.node_connectivity(G) >= 3


def test_trivial_decomposition_equals_dd():
    _, cone = cyclic_cone(8, 4)
    reg = adjacency_decomposition(cone)
    expected = [r.direction for r in dual_description(cone)]
    assert reg.complete
    assert reg.expand(SymmetryAction.trivial(cone)) == expected
    assert reg.total == len(expected)


def test_symmetric_decomposition_of_cube():
    cone = cube_cone(4)
    action = SymmetryAction(cone, cube_symmetries(4))
    reg = adjacency_decomposition(cone, action)
    assert len(reg.orbits) == 1 and reg.total == 16
    assert reg.expand(action) == sorted(r.direction for r in dual_description(cone))


def test_symmetry_validation():
    cone = cube_cone(2)
    with pytest.raises(SymmetryError):
        SymmetryAction(cone, [[[2, 0, 0], [0, 1, 0], [0, 0, 1]]])
    with pytest.raises(SymmetryError):
        SymmetryAction(cone, [[[1, 0], [0, 1]]])


def test_balinski_stop_still_complete():
    # each orbit is a single ray; the stop leaves at most D - 2 untreated
    _, cone = cyclic_cone(9, 4)
    reg = adjacency_decomposition(cone)
    strict = adjacency_decomposition(cone, strict_balinski=True)
    expected = [r.direction for r in dual_description(cone)]
    assert reg.expand(SymmetryAction.trivial(cone)) == expected
    assert strict.expand(SymmetryAction.trivial(cone)) == expected
    untreated = sum(o.size for o in reg.untreated())
    assert untreated <= cone.ambient_dim - 2
    assert sum(o.size for o in strict.untreated()) <= untreated


def test_decomposition_snapshot_and_resume(tmp_path):
    _, cone = cyclic_cone(9, 4)
    snap = tmp_path / "snap.json"
    calls = []

    class Stop(Exception):
        pass

    def interrupt(reg):
        calls.append(1)
        if len(calls) == 2:
            raise Stop

    with pytest.raises(Stop):
        adjacency_decomposition(cone, snapshot=str(snap), on_orbit=interrupt)
    partial = OrbitRegistry.from_json(json.loads(snap.read_text()))
    assert not partial.complete and sum(o.treated for o in partial.orbits) == 2
    resumed = adjacency_decomposition(cone, registry=partial, snapshot=str(snap))
    fresh = adjacency_decomposition(cone)
    assert resumed.to_json() == fresh.to_json()
    assert json.loads(snap.read_text()) == fresh.to_json()


def test_recursive_adjacency_matches_direct():
    _, cone = cyclic_cone(10, 4)
    low = adjacency_decomposition(cone, threshold=3)
    high = adjacency_decomposition(cone, threshold=1000)
    assert low.to_json() == high.to_json()


def test_lp_statuses():
    res = rational_lp([1, 1], A_ub=[[1, 0], [0, 1], [-1, 0], [0, -1]], b_ub=[1, 2, 0, 0])
    assert res.status == OPTIMAL and res.value == 3 and list(res.x) == [1, 2]
    res = rational_lp([1, 0], A_ub=[[0, 1]], b_ub=[1])
    assert res.status == UNBOUNDED
    res = rational_lp([0], A_ub=[[1], [-1]], b_ub=[-1, -1])
    assert res.status == INFEASIBLE
    res = rational_lp([1, 1], A_ub=[[1, 1]], b_ub=[1], A_eq=[[1, -1]], b_eq=[0])
    assert res.value == 1 and list(res.x) == [Fraction(1, 2), Fraction(1, 2)]


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_lp_matches_vertex_enumeration_and_scipy(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 3)
    A = [[rng.randint(-4, 4) for _ in range(n)] for _ in range(rng.randint(1, 5))]
    # a box keeps the problem bounded
    for i in range(n):
        A.append([1 if j == i else 0 for j in range(n)])
        A.append([-1 if j == i else 0 for j in range(n)])
    b = [rng.randint(-3, 6) for _ in range(len(A) - 2 * n)] + [5] * (2 * n)
    c = [rng.randint(-3, 3) for _ in range(n)]
    res = rational_lp(c, A_ub=A, b_ub=b)
    ref = lp_vertices_max(c, A, b)
    sp = linprog([-x for x in c], A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
    if ref is None:
        assert res.status == INFEASIBLE
        assert sp.status == 2
    else:
        assert res.status == OPTIMAL and res.value == ref
        assert abs(float(ref) + sp.fun) < 1e-7
        assert all(linalg.dot(a, res.x) <= bi for a, bi in zip(A, b))
