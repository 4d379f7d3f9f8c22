import itertools
import time
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from oracles import msc_oracle_generators, oracle_closure

from hvzkit.lattice import (
    ClosureTooLarge,
    DimensionMismatch,
    DirectionQ,
    SemiLattice,
    SubspaceQ,
    block_permute,
    canonicalize,
    check_projection_and_difference,
    check_symmetric_action,
    contains_direction,
    enumerate_strata,
    generate_semilattice,
    intersect,
    msc_generators,
    preimage,
    stratum_of,
)


@pytest.mark.parametrize("n,d", [(2, 1), (3, 1), (2, 2)])
def test_msc_closure_matches_oracle(n, d):
    gens = msc_generators(n, d)
    assert [g.basis for g in gens] == msc_oracle_generators(n, d)
    S = generate_semilattice(gens, n * d)
    assert {Y.basis for Y in S} == oracle_closure(gens, n * d)


def test_msc_two_particles_on_line_has_four_elements():
    S = generate_semilattice(msc_generators(2, 1), 2)
    assert len(S) == 4
    assert sorted(Y.dim for Y in S) == [0, 1, 1, 1]


def test_msc_sizes():
    # nonempty set partitions of {0..n} minus the whole space: Bell(n+1) - 1
    assert [len(generate_semilattice(msc_generators(n, 1), n)) for n in (1, 2, 3)] == [1, 4, 14]


@pytest.mark.parametrize("n,d", [(2, 1), (3, 1), (2, 2)])
def test_msc_symmetry_and_projections(n, d):
    S = generate_semilattice(msc_generators(n, d), n * d)
    assert check_symmetric_action(S, n, d)
    for k in range(1, n):
        Sk = generate_semilattice(msc_generators(k, d), k * d)
        for I in itertools.combinations(range(1, n + 1), k):
            assert check_projection_and_difference(S, Sk, I, n, k, d)


def test_symmetric_action_detects_asymmetric_family():
    S = generate_semilattice([canonicalize([[1, 0]], 2)], 2)
    res = check_symmetric_action(S, 2, 1)
    assert not res and res.witness is not None


def test_msc_timing():
    t = time.perf_counter()
    for n, d in [(2, 1), (3, 1), (2, 2)]:
        S = generate_semilattice(msc_generators(n, d), n * d)
        check_symmetric_action(S, n, d)
    assert time.perf_counter() - t < 5


def test_closure_guard():
    with pytest.raises(ClosureTooLarge):
        generate_semilattice(msc_generators(4, 1), 4, max_size=10)


def test_preimage_examples():
    Y = SubspaceQ.zero(1)
    P = preimage(Y, [2], 2, 1)
    assert P == canonicalize([[1, 0]], 2)
    with pytest.raises(ValueError):
        preimage(Y, [3], 2, 1)
    with pytest.raises(DimensionMismatch):
        preimage(SubspaceQ.zero(2), [1], 2, 1)


def test_semilattice_validation():
    a = canonicalize([[1, 0]], 2)
    b = canonicalize([[0, 1]], 2)
    with pytest.raises(ValueError):
        SemiLattice(2, (SubspaceQ.zero(2), a, b, a))
    with pytest.raises(ValueError):
        SemiLattice.of([a, b], 2)
    with pytest.raises(ValueError):
        SemiLattice.of([SubspaceQ.zero(3), canonicalize([[1, 0, 0], [0, 1, 0]], 3), canonicalize([[0, 1, 0], [0, 0, 1]], 3)], 3)
    assert len(SemiLattice.of([SubspaceQ.zero(2), a, b, a], 2)) == 3


def test_strata_of_two_axes():
    S = generate_semilattice([canonicalize([[1, 0]], 2), canonicalize([[0, 1]], 2)], 2)
    strata = enumerate_strata(S)
    assert len(strata) == 3
    assert [str(s.representative) for s in strata] == ["0,1", "1,0", "1,1"]
    assert strata[-1].generic and not strata[0].generic
    assert stratum_of(strata, DirectionQ.of([-3, 0])) == 1
    assert stratum_of(strata, DirectionQ.of([2, -7])) == 2


def test_direction_canonical_form():
    a = DirectionQ.of([Fraction(2, 3), Fraction(-4, 3)])
    assert a.vector == (1, -2)
    assert (-a).vector == (-1, 2)
    with pytest.raises(ValueError):
        DirectionQ.of([0, 0])
    with pytest.raises(ValueError):
        DirectionQ(2, (2, 4))


def test_rank_against_sympy():
    rows = [[1, 2, 3], [2, 4, 6], [1, 0, 1]]
    assert canonicalize(rows, 3).dim == sympy.Matrix(rows).rank()


# -- properties -----------------------------------------------------------

def subspaces(d):
    vec = st.lists(st.integers(-3, 3), min_size=d, max_size=d)
    return st.lists(vec, min_size=0, max_size=d).map(lambda rows: canonicalize(rows, d))


@given(st.data())
def test_intersection_properties(data):
    d = data.draw(st.integers(1, 4))
    A, B, C = (data.draw(subspaces(d)) for _ in range(3))
    AB = intersect(A, B)
    assert AB == intersect(B, A)
    assert intersect(AB, C) == intersect(A, intersect(B, C))
    assert AB.issubspace(A) and AB.issubspace(B)
    assert intersect(A, A) == A
    # dim(A + B) + dim(A n B) = dim A + dim B
    total = canonicalize(list(A.basis) + list(B.basis), d)
    assert total.dim + AB.dim == A.dim + B.dim


@given(st.data())
def test_canonical_form_is_unique(data):
    d = data.draw(st.integers(1, 4))
    A = data.draw(subspaces(d))
    mix = data.draw(st.lists(st.integers(-3, 3), min_size=A.dim * A.dim, max_size=A.dim * A.dim))
    rows = [[sum(mix[i * A.dim + j] * A.basis[j][c] for j in range(A.dim)) + A.basis[i][c] * 7 for c in range(d)] for i in range(A.dim)]
    B = canonicalize(rows + [[0] * d], d)
    if B.dim == A.dim:
        assert B == A
    assert canonicalize(A.basis, d) == A


@given(st.data())
def test_annihilator_is_orthogonal_complement(data):
    d = data.draw(st.integers(1, 4))
    A = data.draw(subspaces(d))
    ann = A.annihilator()
    assert len(ann) == A.codim
    for w in ann:
        for v in A.basis:
            assert sum(x * y for x, y in zip(v, w)) == 0


@given(st.data())
def test_generated_family_is_closed(data):
    d = data.draw(st.integers(1, 3))
    gens = data.draw(st.lists(subspaces(d), max_size=4))
    S = generate_semilattice(gens, d)
    for a in S:
        for b in S:
            assert intersect(a, b) in S
    assert all(g in S for g in gens)


@given(st.permutations(range(3)), st.permutations(range(3)))
def test_block_permute_composes(s1, s2):
    d = 1
    for Y in generate_semilattice(msc_generators(3, d), 3):
        once = block_permute(block_permute(Y, s1, d), s2, d)
        composed = [s2[s1[i]] for i in range(3)]
        assert once == block_permute(Y, composed, d)
        assert once.dim == Y.dim


@given(st.lists(st.integers(-5, 5), min_size=2, max_size=2).filter(any))
def test_every_direction_in_exactly_one_stratum(v):
    S = generate_semilattice(msc_generators(2, 1), 2)
    strata = enumerate_strata(S)
    alpha = DirectionQ.of(v)
    i = stratum_of(strata, alpha)
    assert contains_direction(strata[i].base, alpha)
