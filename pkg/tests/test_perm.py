import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy.combinatorics import Permutation, PermutationGroup

from branchlab import perm as P
from branchlab.config import BudgetExceeded

from oracles import closure_elements, closure_order


def perms(degree):
    return st.permutations(list(range(degree))).map(lambda p: np.array(p, dtype=np.int32))


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7).flatmap(lambda n: st.lists(perms(n), min_size=1, max_size=3)))
def test_order_matches_sympy(gens):
    n = len(gens[0])
    G = P.PermGroup(gens, n)
    ref = PermutationGroup([Permutation(list(map(int, g))) for g in gens])
    assert G.order() == ref.order()


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda n: st.tuples(st.lists(perms(n), min_size=1, max_size=2), perms(n))))
def test_membership_matches_closure(data):
    gens, p = data
    G = P.PermGroup(gens, len(p))
    elems = closure_elements(gens)
    assert G.contains(p) == (tuple(int(x) for x in p) in elems)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 7).flatmap(
    lambda n: st.tuples(st.lists(perms(n), min_size=1, max_size=3),
                        st.lists(st.integers(0, n - 1), max_size=2, unique=True))))
def test_point_stabilizer_order(data):
    gens, pts = data
    n = len(gens[0])
    G = P.PermGroup(gens, n, base=pts)
    ref = PermutationGroup([Permutation(list(map(int, g))) for g in gens])
    S = ref
    for p in pts:
        S = S.stabilizer(p)
    assert G.point_stabilizer(pts).order() == S.order()
    assert G.order() == ref.order()


def test_orbits_and_cycles():
    g = np.array([1, 0, 3, 2, 4], dtype=np.int32)
    G = P.PermGroup([g], 5)
    assert G.orbits() == [[0, 1], [2, 3], [4]]
    assert P.cycles(g) == [[0, 1], [2, 3]]


def test_compose_and_invert():
    p = np.array([2, 0, 1], dtype=np.int32)
    q = np.array([1, 0, 2], dtype=np.int32)
    # p after q: i -> p[q[i]]
    assert list(P.compose(p, q)) == [0, 2, 1]
    assert P.is_identity(P.compose(p, P.invert(p)))


def test_conjugate_and_intersection():
    a = np.array([1, 2, 3, 0], dtype=np.int32)
    b = np.array([1, 0, 3, 2], dtype=np.int32)
    G = P.PermGroup([a, b], 4)
    t = np.array([1, 0, 2, 3], dtype=np.int32)
    H = G.conjugate(t)
    assert H.order() == G.order() == 8
    common = closure_elements([a, b]) & closure_elements(list(H.gens))
    assert G.intersection_order(H) == len(common)
    assert G.intersection(H).order() == len(common)
    assert closure_order(list(G.intersection(H).gens) or [np.arange(4)]) == len(common)


def test_closure_limit():
    gens = [np.array([1, 2, 3, 4, 5, 0]), np.array([1, 0, 2, 3, 4, 5])]
    with pytest.raises(BudgetExceeded):
        P.closure(gens, 6, limit=100)


def test_same_group():
    a = np.array([1, 2, 0], dtype=np.int32)
    assert P.PermGroup([a], 3).same_group(P.PermGroup([P.invert(a)], 3))
