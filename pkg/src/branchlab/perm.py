"""Permutation groups on range(n): closure for small groups, stabilizer chains otherwise.

Permutations are int32 numpy arrays ``p`` with ``p[i]`` the image of ``i``;
``p ∘ q`` is ``p[q]`` (apply q first).
"""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import BudgetExceeded


def identity(n: int) -> np.ndarray:
    return np.arange(n, dtype=np.int32)


def compose(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return p[q]


def invert(p: np.ndarray) -> np.ndarray:
    inv = np.empty_like(p)
    inv[p] = np.arange(len(p), dtype=p.dtype)
    return inv


def is_identity(p: np.ndarray) -> bool:
    return bool(np.array_equal(p, np.arange(len(p))))


def key(p: np.ndarray) -> bytes:
    return np.ascontiguousarray(p, dtype=np.int32).tobytes()


def cycles(p: Sequence[int]) -> list[list[int]]:
    seen, out = set(), []
    for i in range(len(p)):
        if i in seen or p[i] == i:
            continue
        cyc, j = [i], int(p[i])
        seen.add(i)
        while j != i:
            seen.add(j)
            cyc.append(j)
            j = int(p[j])
        out.append(cyc)
    return out


def closure(gens: Sequence[np.ndarray], degree: int, limit: Optional[int] = None) -> dict:
    """All elements of <gens> by breadth-first right multiplication, keyed by bytes.

    Raises BudgetExceeded once more than ``limit`` elements are found.
    """
    e = identity(degree)
    seen = {key(e): e}
    queue = deque([e])
    while queue:
        x = queue.popleft()
        for g in gens:
            y = x[g]
            ky = key(y)
            if ky not in seen:
                seen[ky] = y
                if limit is not None and len(seen) > limit:
                    raise BudgetExceeded(f"closure exceeds {limit} elements")
                queue.append(y)
    return seen


class _Level:
    __slots__ = ("point", "gens", "trans", "stab", "degree", "prefix")

    def __init__(self, degree: int, prefix: tuple = ()):
        self.degree = degree
        self.point: Optional[int] = None
        self.gens: list[np.ndarray] = []
        self.trans: dict[int, np.ndarray] = {}
        self.stab: Optional[_Level] = None
        # prescribed base points still to use, possibly fixed by the group
        self.prefix = prefix


def _sift(level: Optional[_Level], g: np.ndarray) -> np.ndarray:
    while level is not None and level.point is not None:
        b = int(g[level.point])
        u = level.trans.get(b)
        if u is None:
            return g
        g = invert(u)[g]
        level = level.stab
    return g


def _extend(level: _Level, g: np.ndarray) -> None:
    """Add ``g`` (not yet in the level's group) and restore the chain below."""
    if level.point is None:
        if level.prefix:
            level.point = level.prefix[0]
        else:
            level.point = int(np.flatnonzero(g != np.arange(level.degree))[0])
        level.trans = {level.point: identity(level.degree)}
        level.stab = _Level(level.degree, level.prefix[1:])
    level.gens.append(g)
    # pairs (orbit point, generator) still to process
    work = deque((p, g) for p in list(level.trans))
    queue_new = deque()

    def process(p, s):
        q = int(s[p])
        tp = level.trans[p]
        if q not in level.trans:
            level.trans[q] = s[tp]
            queue_new.append(q)
            return
        sch = invert(level.trans[q])[s[tp]]
        r = _sift(level.stab, sch)
        if not is_identity(r):
            _extend(level.stab, r)

    while work or queue_new:
        while work:
            process(*work.popleft())
        while queue_new:
            q = queue_new.popleft()
            for s in list(level.gens):
                process(q, s)
            while work:
                process(*work.popleft())


class PermGroup:
    """The group generated by ``gens`` acting on ``range(degree)``.

    Order and membership come from a deterministic Schreier-Sims chain; the
    element set is materialized only on request and within a limit.
    """

    def __init__(self, gens: Iterable[np.ndarray], degree: int, base: Sequence[int] = ()):
        self.degree = degree
        self.base_prefix = tuple(int(b) for b in base)
        self.gens = [np.asarray(g, dtype=np.int32) for g in gens]
        for g in self.gens:
            if len(g) != degree:
                raise ValueError("generator degree mismatch")
        self._chain: Optional[_Level] = None
        self._elements: Optional[dict] = None

    @property
    def chain(self) -> _Level:
        if self._chain is None:
            root = _Level(self.degree, self.base_prefix)
            for g in self.gens:
                r = _sift(root, g)
                if not is_identity(r):
                    _extend(root, r)
            self._chain = root
        return self._chain

    def base(self) -> list[int]:
        out, lv = [], self.chain
        while lv is not None and lv.point is not None:
            out.append(lv.point)
            lv = lv.stab
        return out

    def point_stabilizer(self, points: Sequence[int]) -> "PermGroup":
        """Pointwise stabilizer of ``points``, which must open the prescribed base."""
        points = tuple(int(p) for p in points)
        if self.base_prefix[:len(points)] != points:
            raise ValueError("the points must be a prefix of the prescribed base")
        lv = self.chain
        for _ in points:
            if lv is None or lv.point is None:
                return PermGroup([], self.degree)
            lv = lv.stab
        gens = []
        while lv is not None and lv.point is not None:
            gens.extend(lv.gens)
            lv = lv.stab
        return PermGroup(gens, self.degree)

    def order(self) -> int:
        n, lv = 1, self.chain
        while lv is not None and lv.point is not None:
            n *= len(lv.trans)
            lv = lv.stab
        return n

    def contains(self, p: np.ndarray) -> bool:
        if self._elements is not None:
            return key(p) in self._elements
        return is_identity(_sift(self.chain, np.asarray(p, dtype=np.int32)))

    __contains__ = contains

    def elements(self, limit: Optional[int] = None) -> dict:
        if self._elements is None:
            self._elements = closure(self.gens, self.degree, limit)
        return self._elements

    def orbits(self) -> list[list[int]]:
        parent = list(range(self.degree))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for g in self.gens:
            for i in range(self.degree):
                a, b = find(i), find(int(g[i]))
                if a != b:
                    parent[max(a, b)] = min(a, b)
        groups: dict[int, list[int]] = {}
        for i in range(self.degree):
            groups.setdefault(find(i), []).append(i)
        return sorted(groups.values())

    def is_subgroup_of(self, other: "PermGroup") -> bool:
        return all(other.contains(g) for g in self.gens)

    def same_group(self, other: "PermGroup") -> bool:
        return (self.order() == other.order() and self.is_subgroup_of(other))

    def conjugate(self, g: np.ndarray) -> "PermGroup":
        """``g H g^-1``."""
        gi = invert(g)
        return PermGroup([g[h[gi]] for h in self.gens], self.degree)

    def intersection_order(self, other: "PermGroup", limit: int = 200_000) -> int:
        small, big = (self, other) if self.order() <= other.order() else (other, self)
        if small.order() > limit:
            raise BudgetExceeded("intersection needs enumeration beyond the limit")
        return sum(1 for p in small.elements().values() if big.contains(p))

    def intersection(self, other: "PermGroup", limit: int = 200_000) -> "PermGroup":
        small, big = (self, other) if self.order() <= other.order() else (other, self)
        if small.order() > limit:
            raise BudgetExceeded("intersection needs enumeration beyond the limit")
        return PermGroup([p for p in small.elements().values() if big.contains(p)], self.degree)
