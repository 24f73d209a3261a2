import json
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from ltype.data import D4, E6_DUAL, R2
from ltype.exact import linalg
from ltype.exact.forms import (
    FormError,
    QuadForm,
    UnimodularMap,
    form_action_matrix,
    is_pd,
    is_psd,
    kernel_split,
    ldl,
    load_form,
    rank,
)
from ltype.exact.isometry import automorphisms, fixed_subspace, form_invariants, group_elements, isometry
from ltype.exact.lattice import closest_vectors, vectors_below

from oracles import box_closest, box_vectors, principal_minors_psd, random_pd, random_unimodular

I2 = QuadForm.identity(2)
A2 = QuadForm.from_rows([[2, 1], [1, 2]])

small_ints = st.integers(-4, 4)


def matrices(rows, cols):
    return st.lists(st.lists(small_ints, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


@given(st.integers(1, 4).flatmap(lambda n: matrices(n, n)))
def test_det_matches_sympy(M):
    assert linalg.det(M) == sympy.Matrix(M).det()


@given(st.integers(1, 4).flatmap(lambda r: st.integers(1, 5).flatmap(lambda c: matrices(r, c))))
def test_rank_and_nullspace_match_sympy(M):
    ncols = len(M[0])
    assert linalg.rank(M) == sympy.Matrix(M).rank()
    ns = linalg.nullspace(M, ncols=ncols)
    assert len(ns) == ncols - linalg.rank(M)
    for v in ns:
        assert all(linalg.dot(row, v) == 0 for row in M)


@given(st.integers(1, 4).flatmap(lambda r: st.integers(1, 5).flatmap(lambda c: matrices(r, c))))
def test_column_echelon_kernel_is_saturated(M):
    H, U, r = linalg.column_echelon(M)
    assert linalg.matmul(M, U) == H
    assert abs(linalg.det(U)) == 1
    assert r == linalg.rank(M)
    kernel = [[U[i][j] for i in range(len(U))] for j in range(r, len(U))]
    for v in kernel:
        assert all(linalg.dot(row, v) == 0 for row in M)


def test_form_json_round_trip_and_errors(tmp_path):
    Q = QuadForm.from_rows([[2, Fraction(1, 3)], [Fraction(1, 3), 5]])
    assert QuadForm.from_json(json.loads(json.dumps(Q.to_json()))) == Q
    with pytest.raises(FormError):
        QuadForm.from_rows([[1, 2], [3, 4]])
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim": 2, "q": [[1, 0], [0, 1]')
    with pytest.raises(FormError, match="line 1 column"):
        load_form(bad)
    nonsym = tmp_path / "nonsym.json"
    nonsym.write_text('{"dim": 2, "q": [["1", "2"], ["0", "1"]]}')
    with pytest.raises(FormError):
        load_form(nonsym)


@pytest.mark.parametrize(
    "rows,expected",
    [([[1, 0], [0, 1]], True), ([[1, 0], [0, -1]], False), ([[1, 1], [1, 1]], True), ([[0, 1], [1, 0]], False)],
)
def test_is_psd_examples(rows, expected):
    assert is_psd(QuadForm.from_rows(rows)) is expected


def test_r2_is_psd_by_principal_minors():
    assert principal_minors_psd(R2.entries)
    assert is_psd(R2)
    assert rank(R2) == 5


@given(st.integers(1, 4).flatmap(lambda n: matrices(n, n)))
def test_is_psd_matches_minor_oracle(A):
    # symmetrize
    n = len(A)
    M = [[A[i][j] + A[j][i] for j in range(n)] for i in range(n)]
    assert is_psd(QuadForm.from_rows(M)) == principal_minors_psd(M)


def test_ldl_reconstructs_form():
    Q = E6_DUAL
    diag, mu = ldl(Q)
    rng = random.Random(3)
    for _ in range(10):
        x = [rng.randint(-3, 3) for _ in range(6)]
        total = sum(diag[i] * (x[i] + sum(mu[i][j] * x[j] for j in range(i + 1, 6))) ** 2 for i in range(6))
        assert total == Q(x)


def test_kernel_split_examples():
    U, block = kernel_split(E6_DUAL)
    assert U.entries == linalg.identity(6) and block == E6_DUAL
    U, block = kernel_split(R2)
    assert U.entries == linalg.identity(6) or block.dim == 5
    assert block == QuadForm.from_rows([row[1:] for row in R2.entries[1:]])
    v = QuadForm.outer((1, 1))
    U, block = kernel_split(v)
    assert block.dim == 1 and is_pd(block)
    T = v.transform(U.entries)
    assert T.entries[1] == (0, 0) and T.entries[0][0] == 1
    with pytest.raises(FormError):
        kernel_split(QuadForm.from_rows([[1, 0], [0, -1]]))


@given(st.integers(0, 10_000))
def test_kernel_split_shape(seed):
    rng = random.Random(seed)
    d = rng.randint(2, 4)
    k = rng.randint(1, d - 1)
    vecs = [[rng.randint(-2, 2) for _ in range(d)] for _ in range(k)]
    Q = QuadForm.zero(d)
    for v in vecs:
        Q = Q + QuadForm.outer(v)
    if Q.is_zero():
        return
    U, block = kernel_split(Q)
    T = Q.transform(U.entries)
    r = rank(Q)
    assert block.dim == r and is_pd(block)
    assert all(T.entries[i][j] == (block.entries[i][j] if i < r and j < r else 0) for i in range(d) for j in range(d))


def test_vectors_below_examples():
    assert len(vectors_below(I2, 1)) == 5
    assert len(vectors_below(A2, 2)) == 7
    assert vectors_below(D4, 0) == [(0, 0, 0, 0)]


@given(st.integers(0, 10_000), st.integers(0, 10))
def test_vectors_below_matches_box(seed, c):
    rng = random.Random(seed)
    Q = random_pd(rng, rng.randint(1, 3), spread=1)
    assert vectors_below(Q, c) == box_vectors(Q, c, R=4 if Q.dim < 3 else 3)


def test_closest_vector_ties():
    assert closest_vectors(I2, [Fraction(1, 2), 0]) == [(0, 0), (1, 0)]
    assert len(closest_vectors(I2, [Fraction(1, 2), Fraction(1, 2)])) == 4


@given(st.integers(0, 10_000))
def test_closest_vectors_match_box(seed):
    rng = random.Random(seed)
    Q = random_pd(rng, 3, spread=1)
    t = [Fraction(rng.randint(-6, 6), rng.randint(2, 4)) for _ in range(3)]
    assert closest_vectors(Q, t) == box_closest(Q, t, R=5)


@pytest.mark.parametrize(
    "Q,order",
    [(I2, 8), (A2, 12), (QuadForm.identity(3), 48), (D4, 1152), (E6_DUAL, 103680)],
)
def test_automorphism_orders(Q, order):
    gens, n = automorphisms(Q)
    assert n == order
    for g in gens:
        assert Q.transform(g.entries) == Q


def test_automorphism_order_equals_generated_group():
    for Q in (I2, A2, QuadForm.identity(3)):
        gens, n = automorphisms(Q)
        assert len(group_elements(gens)) == n


def test_a2_automorphisms_by_brute_force():
    # all integer matrices with entries in [-1, 1] cover Aut(A2)
    import itertools

    count = 0
    for e in itertools.product((-1, 0, 1), repeat=4):
        A = ((e[0], e[1]), (e[2], e[3]))
        if abs(linalg.det(A)) == 1 and A2.transform(A) == A2:
            count += 1
    assert count == 12


@settings(max_examples=12)
@given(st.integers(0, 10_000))
def test_isometry_of_conjugates(seed):
    rng = random.Random(seed)
    d = rng.randint(2, 4)
    Q = random_pd(rng, d, spread=1)
    U = random_unimodular(rng, d)
    Q2 = Q.transform(U)
    A = isometry(Q, Q2)
    assert A is not None and Q.transform(A.entries) == Q2
    B = isometry(Q2, Q)
    assert B is not None and Q2.transform(B.entries) == Q
    assert form_invariants(Q) == form_invariants(Q2)
    V = random_unimodular(rng, d)
    Q3 = Q2.transform(V)
    C = isometry(Q, Q3)
    assert C is not None and Q.transform(C.entries) == Q3


def test_isometry_negative_and_identity():
    assert isometry(I2, A2) is None
    A = isometry(E6_DUAL, E6_DUAL)
    assert A is not None and E6_DUAL.transform(A.entries) == E6_DUAL


def test_fixed_subspace_examples():
    gens, _ = automorphisms(QuadForm.identity(3))
    basis = fixed_subspace(gens)
    assert len(basis) == 1 and QuadForm.from_vector(3, basis[0]).primitive() == QuadForm.identity(3)
    assert len(fixed_subspace([], 3)) == 6
    swap = UnimodularMap(((0, 1), (1, 0)))
    basis = fixed_subspace([swap])
    assert len(basis) == 2
    for v in basis:
        assert v[0] == v[1]


def test_fixed_subspace_vectors_are_fixed():
    gens, _ = automorphisms(E6_DUAL)
    for v in fixed_subspace(gens):
        for g in gens:
            M = form_action_matrix(g.entries)
            assert tuple(linalg.matvec(M, v)) == tuple(v)


def test_unimodular_map_validation():
    with pytest.raises(FormError):
        UnimodularMap(((2, 0), (0, 1)))
    U = UnimodularMap(((1, 1), (0, 1)))
    assert (U @ U.inverse()).entries == linalg.identity(2)
