"""Congruence quotients G/st_G(n) as permutation groups on X^n."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import perm as P
from .config import DEFAULT_BUDGET, Budget
from .fgsub import FgSubgroup, SchreierData, orbit_schreier
from .ssgroup import Element, GroupDef, Word
from .tree import Vertex


@dataclass(frozen=True, eq=False)
class LevelQuotient:
    """π_n(G) acting on the k^n vertices of level n."""

    group: GroupDef
    level: int
    generator_images: tuple
    _pg: Optional[P.PermGroup] = field(default=None, repr=False)

    @classmethod
    def build(cls, group: GroupDef, n: int, budget: Budget = DEFAULT_BUDGET) -> "LevelQuotient":
        imgs = tuple(group.level_perm((i + 1,), n, budget) for i in range(group.rank))
        return cls(group, n, imgs, P.PermGroup(imgs, group.alphabet_size ** n))

    @property
    def degree(self) -> int:
        return self.group.alphabet_size ** self.level

    @property
    def perm_group(self) -> P.PermGroup:
        return self._pg

    def order(self) -> int:
        return self._pg.order()

    def contains(self, p) -> bool:
        return self._pg.contains(np.asarray(p, dtype=np.int32))

    def vertex_label(self, i: int) -> str:
        return str(Vertex.from_index(i, self.level, self.group.alphabet_size))

    def format(self, p) -> str:
        """Cycle notation over vertex strings."""
        cyc = P.cycles(p)
        if not cyc:
            return "id"
        return "".join("(" + " ".join(self.vertex_label(i) for i in c) + ")" for c in cyc)

    def report(self) -> dict:
        return {
            "group": self.group.name or "custom",
            "level": self.level,
            "order": self.order(),
            "generators": {n: self.format(p) for n, p in zip(self.group.names, self.generator_images)},
        }


_quotients: dict = {}


def level_quotient(group: GroupDef, n: int, budget: Budget = DEFAULT_BUDGET) -> LevelQuotient:
    key = (id(group), n)
    q = _quotients.get(key)
    if q is None or q.group is not group:
        q = LevelQuotient.build(group, n, budget)
        _quotients[key] = q
    return q


def project(g: Element, n: int, budget: Budget = DEFAULT_BUDGET) -> np.ndarray:
    return g.group.level_perm(g.word, n, budget)


def quotient_order(group: GroupDef, n: int, budget: Budget = DEFAULT_BUDGET) -> int:
    return level_quotient(group, n, budget).order()


def subgroup_index_in_quotient(H: FgSubgroup, n: int, budget: Budget = DEFAULT_BUDGET) -> int:
    """|G : H st_G(n)| = |π_n(G) : π_n(H)|."""
    return quotient_order(H.ambient, n, budget) // H.level_group(n, budget).order()


def index_trace(H: FgSubgroup, levels: Sequence[int], budget: Budget = DEFAULT_BUDGET) -> list[int]:
    return [subgroup_index_in_quotient(H, n, budget) for n in levels]


def membership_in_quotient(p, H: FgSubgroup, n: int, budget: Budget = DEFAULT_BUDGET) -> bool:
    return H.level_group(n, budget).contains(np.asarray(p, dtype=np.int32))


def level_action(group: GroupDef, n: int, budget: Budget = DEFAULT_BUDGET):
    """Start state and action of G on itself through π_n; states are level-n permutations."""
    start = tuple(range(group.alphabet_size ** n))
    cache: dict = {}

    def apply(word: Word, state):
        p = cache.get(word)
        if p is None:
            p = group.level_perm(word, n, budget)
            cache[word] = p
        return tuple(p[np.asarray(state, dtype=np.int32)].tolist())

    return start, apply


def level_stabilizer_data(group: GroupDef, n: int, budget: Budget = DEFAULT_BUDGET) -> SchreierData:
    G = FgSubgroup.whole(group)
    key = ("levelstab", n, budget.closure_limit)
    cache = group.__dict__.setdefault("_stab_cache", {})
    if key not in cache:
        start, apply = level_action(group, n, budget)
        cache[key] = (G, orbit_schreier(G, start, apply, budget.closure_limit, budget))
    return cache[key][1]


def level_stabilizer_generators(group: GroupDef, n: int, budget: Budget = DEFAULT_BUDGET) -> FgSubgroup:
    """Schreier generators of st_G(n) through a shortest-word transversal of π_n(G).

    The index certificate is the transversal size, |G : st_G(n)| = |π_n(G)|.
    """
    data = level_stabilizer_data(group, n, budget)
    G = FgSubgroup.whole(group)
    return FgSubgroup(group, tuple(w for _, w in data.schreier), f"st({n})",
                      index=len(data.orbit), parent=G,
                      parent_exprs=tuple(e for e, _ in data.schreier))


def conjugacy_class_size_in_quotient(g: Element, n: int, budget: Budget = DEFAULT_BUDGET) -> int:
    """Size of the class of π_n(g) in π_n(G), by orbit of conjugation by the generators."""
    q = level_quotient(g.group, n, budget)
    x = project(g, n, budget)
    gens = [(p, P.invert(p)) for p in q.generator_images]
    seen = {P.key(x)}
    frontier = [x]
    while frontier:
        nxt = []
        for y in frontier:
            for p, pi in gens:
                z = p[y[pi]]
                kz = P.key(z)
                if kz not in seen:
                    seen.add(kz)
                    nxt.append(z)
        frontier = nxt
    return len(seen)
