import numpy as np
import pytest

from branchlab.config import Budget, BudgetExceeded
from branchlab.fgsub import FgSubgroup
from branchlab.quotient import (conjugacy_class_size_in_quotient, index_trace, level_quotient,
                                level_stabilizer_generators, membership_in_quotient, project,
                                quotient_order)
from branchlab.ssgroup import builtin, parse_group
from branchlab.subgroup import branching_subgroup, subgroup_from_words

import oracles

G = builtin("grigorchuk")
GS = builtin("gupta_sidki3")


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_grigorchuk_orders_match_closure(n):
    assert quotient_order(G, n) == oracles.word_order_on_level("grigorchuk", "abcd", n)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gupta_sidki_orders_match_closure(n):
    assert quotient_order(GS, n) == oracles.word_order_on_level("gupta_sidki3", "at", n)


def test_known_orders():
    # 2^(5*2^(n-3)+2) from level 3 on
    assert [quotient_order(G, n) for n in range(1, 7)] == [2, 8, 2 ** 7, 2 ** 12, 2 ** 22, 2 ** 42]
    assert quotient_order(GS, 4) == 3 ** 19


def test_level_cap():
    with pytest.raises(BudgetExceeded):
        quotient_order(parse_group(G.to_text()), 3, Budget(max_level_binary=2))


def test_subgroup_index_traces():
    K = branching_subgroup(G)
    assert index_trace(K, [1, 2, 3, 4, 5]) == [2, 4, 16, 16, 16]
    B = subgroup_from_words(G, ["b"])
    assert index_trace(B, [1, 2, 3]) == [2, 4, 64]
    assert index_trace(FgSubgroup.whole(G), [1, 2, 3]) == [1, 1, 1]


def test_index_trace_matches_oracle():
    H = subgroup_from_words(G, ["a", "b"])
    for n in range(1, 5):
        full = oracles.word_order_on_level("grigorchuk", "abcd", n)
        sub = oracles.word_order_on_level("grigorchuk", ["a", "b"], n)
        assert index_trace(H, [n]) == [full // sub]


@pytest.mark.parametrize("grp,n", [(G, 1), (G, 2), (G, 3), (GS, 1), (GS, 2)])
def test_stabilizer_generators_fix_the_level(grp, n):
    S = level_stabilizer_generators(grp, n)
    assert S.index == quotient_order(grp, n)
    for w in S.generators:
        assert np.array_equal(grp.level_perm(w, n), np.arange(grp.alphabet_size ** n))


def test_stabilizer_generators_generate_the_stabilizer():
    # the image of st(2) at level 4 has index |pi_2(G)| in pi_4(G)
    S = level_stabilizer_generators(G, 2)
    assert S.level_group(4).order() * quotient_order(G, 2) == quotient_order(G, 4)


def test_membership_and_projection():
    H = subgroup_from_words(G, ["b", "c"])
    assert membership_in_quotient(project(G.element("d"), 3), H, 3)
    assert not membership_in_quotient(project(G.element("a"), 3), H, 3)


def test_quotient_report_format():
    q = level_quotient(G, 2)
    rep = q.report()
    assert rep["order"] == 8
    assert rep["generators"]["a"] == "(00 10)(01 11)"
    assert rep["generators"]["d"] == "id"


def test_conjugacy_class_size():
    # a is conjugate to itself and to a^b = aca... in pi_2 the class of a has size 2
    size = conjugacy_class_size_in_quotient(G.element("a"), 2)
    q = level_quotient(G, 2)
    elems = q.perm_group.elements()
    a = project(G.element("a"), 2)
    cls = {tuple(g[a[np.argsort(g)]]) for g in elems.values()}
    assert size == len(cls)
