from hypothesis import given, settings, strategies as st

from branchlab.config import Budget
from branchlab.fgsub import FgSubgroup
from branchlab.ssgroup import builtin, inverse_word
from branchlab.subgroup import branching_subgroup, subgroup_from_words
from branchlab.witness import (MembershipWitness, WordBall, excluded_at, find_witness, witnesses)

G = builtin("grigorchuk")
GS = builtin("gupta_sidki3")


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=6))
def test_witness_for_expression_words(expr):
    # words built from generators of H always get a checkable witness
    H = subgroup_from_words(G, ["b", "aba", "ada"])
    target = H.evaluate(tuple(expr))
    e = find_witness(H, target)
    assert e is not None
    assert MembershipWitness(target, e).check(H)


def test_letter_substitution_for_whole_group():
    W = FgSubgroup.whole(G)
    w = G.parse_word("abcdab")
    e = find_witness(W, w)
    assert G.is_trivial(inverse_word(W.evaluate(e)) + w)


def test_excluded_elements():
    B = subgroup_from_words(G, ["b"])
    assert excluded_at(B, G.parse_word("a")) == 1
    assert excluded_at(B, G.parse_word("c")) == 3  # b, c agree on level 2
    assert excluded_at(B, G.parse_word("b")) is None


def test_branching_witnesses():
    K = branching_subgroup(G)
    targets = [G.parse_word(w) for w in ["abab" * 2, "babababa", "badabada"]]
    wits, failed = witnesses(K, targets)
    assert failed is None
    assert all(w.check(K) for w in wits)
    assert wits[0].as_dict(K)["target"] == "abababab"


def test_search_fails_outside():
    K = branching_subgroup(G)
    ball = WordBall(K, Budget(ball_size=200, witness_depth=4))
    assert ball.search(G.parse_word("b")) is None
    assert ball.full


def test_gupta_sidki_ball():
    K = branching_subgroup(GS)
    ball = WordBall(K, Budget(ball_size=300))
    while ball.grow():
        pass
    assert len(ball) == 300
    # elements are distinct on the hash level or by bisimulation
    assert len(set(ball.words)) == len(ball)
