"""Combinatorics of the rooted tree X*: vertices, leaf sets, shadows."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence


@dataclass(frozen=True, order=True)
class Vertex:
    """A word over the alphabet {0, ..., k-1}, root side first."""

    letters: tuple[int, ...]
    alphabet_size: int = 2

    def __post_init__(self):
        if self.alphabet_size < 1:
            raise ValueError("alphabet size must be positive")
        for x in self.letters:
            if not 0 <= x < self.alphabet_size:
                raise ValueError(
                    f"letter {x} outside alphabet of size {self.alphabet_size}")

    @classmethod
    def parse(cls, text: str, alphabet_size: int = 2) -> "Vertex":
        text = text.strip()
        if text in ("-", "", "ε"):
            return cls((), alphabet_size)
        if not text.isdigit():
            raise ValueError(f"bad vertex {text!r}")
        return cls(tuple(int(c) for c in text), alphabet_size)

    @classmethod
    def root(cls, alphabet_size: int = 2) -> "Vertex":
        return cls((), alphabet_size)

    @property
    def level(self) -> int:
        return len(self.letters)

    def child(self, x: int) -> "Vertex":
        return Vertex(self.letters + (x,), self.alphabet_size)

    def __add__(self, other: "Vertex") -> "Vertex":
        _same_alphabet(self, other)
        return Vertex(self.letters + other.letters, self.alphabet_size)

    def prefix(self, n: int) -> "Vertex":
        return Vertex(self.letters[:n], self.alphabet_size)

    def index(self) -> int:
        """Position of the vertex among X^level, first letter most significant."""
        i = 0
        for x in self.letters:
            i = i * self.alphabet_size + x
        return i

    @classmethod
    def from_index(cls, index: int, level: int, alphabet_size: int) -> "Vertex":
        letters = []
        for _ in range(level):
            index, x = divmod(index, alphabet_size)
            letters.append(x)
        return cls(tuple(reversed(letters)), alphabet_size)

    def __str__(self) -> str:
        return "".join(map(str, self.letters)) or "-"

    def __repr__(self) -> str:
        return f"Vertex({str(self)!r})"


def _same_alphabet(u: Vertex, v: Vertex) -> None:
    if u.alphabet_size != v.alphabet_size:
        raise ValueError("vertices over different alphabets")


def is_prefix(u: Vertex, v: Vertex) -> bool:
    _same_alphabet(u, v)
    return v.letters[:len(u.letters)] == u.letters


def level_vertices(alphabet_size: int, n: int) -> Iterator[Vertex]:
    for letters in itertools.product(range(alphabet_size), repeat=n):
        yield Vertex(letters, alphabet_size)


def is_leaf_set(vertices: Iterable[Vertex]) -> bool:
    vs = set(vertices)
    letters = {v.letters for v in vs}
    for v in vs:
        for i in range(len(v.letters)):
            if v.letters[:i] in letters:
                return False
    return True


class LeafSet:
    """A finite set of pairwise prefix-incomparable vertices.

    ``LeafSet.full_level(k, n)`` builds the symbolic level X^n; its vertices
    are only materialized when iterated.
    """

    __slots__ = ("alphabet_size", "_vertices", "_full_level")

    def __init__(self, vertices: Iterable[Vertex] = (), alphabet_size: Optional[int] = None,
                 *, _full_level: Optional[int] = None):
        self._full_level = _full_level
        if _full_level is not None:
            self.alphabet_size = alphabet_size
            self._vertices = None
            return
        vs = frozenset(vertices)
        sizes = {v.alphabet_size for v in vs}
        if alphabet_size is None:
            if len(sizes) != 1:
                raise ValueError("cannot infer alphabet size")
            alphabet_size = sizes.pop()
        elif sizes - {alphabet_size}:
            raise ValueError("vertices over a different alphabet")
        if not is_leaf_set(vs):
            raise ValueError("vertices are not pairwise prefix-incomparable")
        self.alphabet_size = alphabet_size
        self._vertices = vs

    @classmethod
    def full_level(cls, alphabet_size: int, n: int) -> "LeafSet":
        return cls(alphabet_size=alphabet_size, _full_level=n)

    @classmethod
    def parse(cls, text: str, alphabet_size: int = 2) -> "LeafSet":
        text = text.strip()
        if text.startswith("X^"):
            return cls.full_level(alphabet_size, int(text[2:]))
        if not text:
            return cls((), alphabet_size)
        return cls((Vertex.parse(p, alphabet_size) for p in text.split(",")),
                   alphabet_size)

    @property
    def vertices(self) -> frozenset:
        if self._vertices is None:
            self._vertices = frozenset(level_vertices(self.alphabet_size, self._full_level))
        return self._vertices

    @property
    def full_level_n(self) -> Optional[int]:
        if self._full_level is not None:
            return self._full_level
        return None

    @property
    def depth(self) -> int:
        """Largest level of a member (0 for the empty set)."""
        if self._full_level is not None:
            return self._full_level
        return max((v.level for v in self._vertices), default=0)

    def sorted(self) -> list[Vertex]:
        return sorted(self.vertices)

    def __iter__(self):
        return iter(self.sorted())

    def __len__(self) -> int:
        if self._full_level is not None:
            return self.alphabet_size ** self._full_level
        return len(self._vertices)

    def __contains__(self, v: Vertex) -> bool:
        if self._full_level is not None:
            return v.level == self._full_level and v.alphabet_size == self.alphabet_size
        return v in self._vertices

    def __eq__(self, other) -> bool:
        if not isinstance(other, LeafSet):
            return NotImplemented
        return self.alphabet_size == other.alphabet_size and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash((self.alphabet_size, self.vertices))

    def union(self, other: "LeafSet") -> "LeafSet":
        return LeafSet(self.vertices | other.vertices, self.alphabet_size)

    def covering(self, v: Vertex) -> Optional[Vertex]:
        """The member that is a prefix of ``v``, if any."""
        if self._full_level is not None:
            return v.prefix(self._full_level) if v.level >= self._full_level else None
        for i in range(v.level + 1):
            p = Vertex(v.letters[:i], self.alphabet_size)
            if p in self._vertices:
                return p
        return None

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.sorted())

    def __repr__(self) -> str:
        if self._full_level is not None:
            return f"LeafSet(X^{self._full_level})"
        return f"LeafSet({str(self)!r})"


def _measure(Y: LeafSet) -> Fraction:
    k = Y.alphabet_size
    return sum((Fraction(1, k ** v.level) for v in Y.vertices), Fraction(0))


def spanning_depth(Y: LeafSet) -> Optional[int]:
    """Least N such that every vertex of level >= N lies below Y; None if Y is not spanning."""
    if Y.full_level_n is not None:
        return Y.full_level_n
    if not len(Y) or _measure(Y) != 1:
        return None
    return Y.depth


def is_spanning(Y: LeafSet) -> bool:
    return spanning_depth(Y) is not None


def _descendants(v: Vertex, n: int) -> Iterator[Vertex]:
    for tail in itertools.product(range(v.alphabet_size), repeat=n - v.level):
        yield Vertex(v.letters + tail, v.alphabet_size)


def extend_to_spanning(Y: LeafSet, target_level: int) -> LeafSet:
    if target_level < Y.depth:
        raise ValueError(f"target level {target_level} below depth {Y.depth}")
    if Y.full_level_n is not None:
        return Y
    k = Y.alphabet_size
    out = set(Y.vertices)

    def walk(u: Vertex):
        if u in Y.vertices:
            return
        if u.level == target_level:
            out.add(u)
            return
        for x in range(k):
            walk(u.child(x))

    walk(Vertex.root(k))
    return LeafSet(out, k)


def shadow(T: LeafSet, n: int) -> LeafSet:
    """All level-n vertices lying below some member of T."""
    if not len(T):
        raise ValueError("shadow of an empty leaf set")
    if n < T.depth:
        raise ValueError(f"level {n} below depth {T.depth} of T")
    if T.full_level_n is not None:
        return LeafSet.full_level(T.alphabet_size, n)
    return LeafSet((w for t in T.vertices for w in _descendants(t, n)), T.alphabet_size)


def is_independent(family: Sequence[LeafSet]) -> bool:
    union = set()
    for Y in family:
        union |= Y.vertices
    return is_leaf_set(union)
