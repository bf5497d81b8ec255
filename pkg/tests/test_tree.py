import pytest
from hypothesis import given, strategies as st

from branchlab.tree import (LeafSet, Vertex, extend_to_spanning, is_independent, is_leaf_set,
                            is_prefix, is_spanning, level_vertices, shadow, spanning_depth)


def test_vertex_parse_and_str():
    v = Vertex.parse("0110")
    assert v.letters == (0, 1, 1, 0)
    assert str(v) == "0110"
    assert str(Vertex.root()) == "-"
    assert Vertex.parse("-") == Vertex.root()
    with pytest.raises(ValueError):
        Vertex.parse("012")
    with pytest.raises(ValueError):
        Vertex.parse("0a")


@given(st.integers(1, 3).flatmap(
    lambda k: st.tuples(st.just(k + 1), st.lists(st.integers(0, k), max_size=7))))
def test_vertex_index_roundtrip(data):
    k, letters = data
    v = Vertex(tuple(letters), k)
    assert Vertex.from_index(v.index(), v.level, k) == v


def test_vertex_prefix_and_concat():
    u, v = Vertex.parse("01"), Vertex.parse("10")
    assert (u + v).letters == (0, 1, 1, 0)
    assert is_prefix(u, u + v)
    assert not is_prefix(v, u + v)
    assert (u + v).prefix(2) == u


def test_leafset_rejects_comparable_vertices():
    with pytest.raises(ValueError):
        LeafSet.parse("0,01")
    assert not is_leaf_set([Vertex.parse("1"), Vertex.parse("10")])


def test_full_level_is_symbolic():
    X3 = LeafSet.full_level(2, 3)
    assert len(X3) == 8
    assert Vertex.parse("011") in X3
    assert Vertex.parse("01") not in X3
    assert X3 == LeafSet.parse("000,001,010,011,100,101,110,111")
    assert str(LeafSet.parse("X^1", 3)) == "0,1,2"


def test_shadow_example():
    assert str(shadow(LeafSet.parse("0,10"), 2)) == "00,01,10"
    with pytest.raises(ValueError):
        shadow(LeafSet.parse("0,10"), 1)


@given(st.sets(st.text("01", min_size=1, max_size=3), min_size=1, max_size=4), st.integers(0, 2))
def test_shadow_size(words, extra):
    vs = [Vertex.parse(w) for w in words]
    if not is_leaf_set(vs):
        return
    T = LeafSet(vs, 2)
    n = T.depth + extra
    S = shadow(T, n)
    assert len(S) == sum(2 ** (n - v.level) for v in vs)
    assert all(T.covering(w) is not None for w in S)


def test_spanning_depth():
    assert spanning_depth(LeafSet.parse("0,10,11")) == 2
    assert spanning_depth(LeafSet.parse("0,10")) is None
    assert spanning_depth(LeafSet.full_level(3, 2)) == 2
    assert spanning_depth(LeafSet([Vertex.root()], 2)) == 0


def test_extend_to_spanning():
    Y = extend_to_spanning(LeafSet.parse("0,10"), 3)
    assert is_spanning(Y)
    assert str(Y) == "0,10,110,111"
    with pytest.raises(ValueError):
        extend_to_spanning(LeafSet.parse("0,100"), 2)


def test_independence():
    assert is_independent([LeafSet.parse("00"), LeafSet.parse("01,1")])
    assert not is_independent([LeafSet.parse("0"), LeafSet.parse("01")])


def test_level_vertices_order():
    assert [str(v) for v in level_vertices(2, 2)] == ["00", "01", "10", "11"]
    assert [v.index() for v in level_vertices(3, 2)] == list(range(9))
