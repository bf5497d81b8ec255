import pytest
from hypothesis import given, settings, strategies as st

from branchlab.certify import Verifier
from branchlab.config import Budget
from branchlab.fgsub import FgSubgroup
from branchlab.leafsys import diagonal_subgroup, rigid_copy
from branchlab.quotient import index_trace, quotient_order
from branchlab.ssgroup import builtin
from branchlab.subgroup import (approximate, branching_subgroup, certify_level_containment,
                                certify_some_level, commensuration_indices, find_kernel_element,
                                finiteness_verdict, growth_evidence, infra_direct_verdict,
                                level_generator_witnesses, minimal_injective_support,
                                orbit_on_level, pointwise_stabilizer, section_subgroup,
                                subgroup_from_words, trivial_subgroup)
from branchlab.tree import LeafSet, Vertex

import oracles

G = builtin("grigorchuk")
GS = builtin("gupta_sidki3")
X1 = LeafSet.full_level(2, 1)

words = st.lists(st.text("abcd", min_size=1, max_size=6), min_size=1, max_size=3)


@pytest.mark.parametrize("gens,order", [(["a", "b"], 32), (["a", "c"], 16), (["a", "d"], 8),
                                        (["b", "c"], 4), ([], 1)])
def test_dihedral_subgroups_are_finite(gens, order):
    v = finiteness_verdict(subgroup_from_words(G, gens))
    assert v.is_proved
    assert v.certificate["order"] == order
    Verifier(G).check(v.certificate)


def test_whole_group_is_not_proved_finite():
    v = finiteness_verdict(subgroup_from_words(G, ["a", "b", "c"]))
    assert v.is_unknown
    assert v.evidence["growth"]["strictly_growing"]


def test_branching_subgroup_contains_level_three():
    K = branching_subgroup(G)
    v = certify_some_level(K)
    assert v.is_proved and v.certificate["level"] == 3
    assert v.evidence["index"] == 16
    Verifier(G).check(v.certificate)
    assert certify_level_containment(K, 2).is_unknown


def test_explicit_level_generator_witnesses():
    K = branching_subgroup(G)
    v = certify_level_containment(K, 3)
    wits = level_generator_witnesses(K, v.certificate)
    assert len(wits) > 0
    assert all(w.check(K) for w in wits)


def test_infra_direct():
    assert infra_direct_verdict(FgSubgroup.whole(G), X1).is_proved
    v = infra_direct_verdict(subgroup_from_words(G, ["b"]), X1)
    assert v.is_refuted
    assert v.certificate["kind"] == "finite_section"
    Verifier(G).check(v.certificate, "refuted")
    with pytest.raises(ValueError):
        infra_direct_verdict(FgSubgroup.whole(G), LeafSet.parse("0"))


def test_gupta_sidki_infra_direct():
    v = infra_direct_verdict(FgSubgroup.whole(GS), LeafSet.full_level(3, 1))
    assert v.is_proved


def test_stabilizer_and_sections():
    B = subgroup_from_words(G, ["b"])
    S = pointwise_stabilizer(B, X1)
    assert S.index == 1
    assert section_subgroup(S, Vertex.parse("0")).gen_strings() == ["a"]
    with pytest.raises(ValueError):
        section_subgroup(FgSubgroup.whole(G), Vertex.parse("0"))
    St = pointwise_stabilizer(FgSubgroup.whole(G), X1)
    assert St.index == 2
    for w in St.generators:
        assert G.root_perm(w) == (0, 1)


def test_orbits():
    orbs = orbit_on_level(subgroup_from_words(G, ["a", "d"]), 2)
    assert [[str(v) for v in o] for o in orbs] == [["00", "10"], ["01", "11"]]
    assert len(orbit_on_level(trivial_subgroup(G), 3)) == 8
    assert len(orbit_on_level(FgSubgroup.whole(G), 5)) == 1


def test_minimal_injective_support():
    D = diagonal_subgroup(G, X1)
    U, v = minimal_injective_support(D, X1)
    assert str(U) == "0"
    assert v.is_unknown
    R = rigid_copy(G, X1)
    U, v = minimal_injective_support(R, X1)
    assert str(U) == "0,1"
    ker = v.evidence["kernel_elements"]
    assert ker
    for c in ker:
        Verifier(G).check(c)


def test_kernel_element_certificate():
    R = rigid_copy(G, X1)
    c = find_kernel_element(R, [Vertex.parse("0")], V=list(X1))
    assert c is not None and c["support"] == ["0"]
    Verifier(G).check(c)


def test_growth_and_commensuration():
    B = subgroup_from_words(G, ["b"])
    ev = growth_evidence(B)
    assert ev["order"] == [1, 2, 2, 2, 2] and not ev["strictly_growing"]
    assert growth_evidence(B, what="index")["strictly_growing"]
    assert commensuration_indices(B, G.element("a"), 3) == (2, 2)
    assert commensuration_indices(B, G.element("d"), 3) == (1, 1)


@settings(max_examples=25, deadline=None)
@given(words)
def test_index_trace_is_monotone_and_matches_oracle(gens):
    H = subgroup_from_words(G, gens)
    trace = index_trace(H, [1, 2, 3, 4])
    assert all(b % a == 0 for a, b in zip(trace, trace[1:]))
    n = 3
    sub = oracles.word_order_on_level("grigorchuk", gens, n)
    assert trace[n - 1] == quotient_order(G, n) // sub


@settings(max_examples=20, deadline=None)
@given(words, st.integers(1, 4))
def test_restriction_matches_lower_level(gens, m):
    H = subgroup_from_words(G, gens)
    assert approximate(H, 5).restrict(m).order() == H.level_group(m).order()


def test_small_budget_gives_unknown():
    K = branching_subgroup(G)
    tiny = Budget(witness_depth=1, ball_size=5)
    v = certify_level_containment(K, 3, tiny)
    assert v.is_unknown
