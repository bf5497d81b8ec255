"""Finitely generated subgroups as generator-word lists, and Schreier machinery.

An *expression* is a word over a subgroup's generators, encoded like group
words: ``i + 1`` is the i-th generator, ``-(i + 1)`` its inverse.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional, Sequence

from .config import DEFAULT_BUDGET, Budget, BudgetExceeded
from .perm import PermGroup
from .ssgroup import Element, GroupDef, Word, inverse_word
from .tree import LeafSet, Vertex

Expr = tuple


@dataclass(frozen=True, eq=False)
class FgSubgroup:
    ambient: GroupDef
    generators: tuple = ()
    name: Optional[str] = None
    # orbit size certificate when cut out as a stabilizer of some parent
    index: Optional[int] = None
    # expressions of the generators over the parent's generators, when known
    parent: Optional["FgSubgroup"] = None
    parent_exprs: Optional[tuple] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def make(cls, ambient: GroupDef, words: Sequence, name: Optional[str] = None,
             budget: Budget = DEFAULT_BUDGET, **kw) -> "FgSubgroup":
        """Reduce the words, drop duplicates and proved identities."""
        gens, seen = [], set()
        exprs = kw.pop("parent_exprs", None)
        kept_exprs = []
        for i, w in enumerate(words):
            if isinstance(w, str):
                w = ambient.parse_word(w)
            elif isinstance(w, Element):
                w = w.word
            w = ambient.reduce(tuple(w))
            if not w or w in seen or ambient.is_trivial(w, budget):
                continue
            seen.add(w)
            gens.append(w)
            if exprs is not None:
                kept_exprs.append(exprs[i])
        if exprs is not None:
            kw["parent_exprs"] = tuple(kept_exprs)
        return cls(ambient, tuple(gens), name, **kw)

    @classmethod
    def whole(cls, ambient: GroupDef) -> "FgSubgroup":
        return cls(ambient, tuple((i + 1,) for i in range(ambient.rank)), "G")

    @property
    def is_trivial_list(self) -> bool:
        return not self.generators

    def elements(self) -> list[Element]:
        return [Element(self.ambient, w) for w in self.generators]

    def symbols(self) -> list[int]:
        """Generator indices (1-based) then inverses that are new words."""
        syms = list(range(1, len(self.generators) + 1))
        own = set(self.generators)
        for i, w in enumerate(self.generators):
            if self.ambient.reduce(inverse_word(w)) not in own:
                syms.append(-(i + 1))
        return syms

    def symbol_word(self, s: int) -> Word:
        w = self.generators[abs(s) - 1]
        return w if s > 0 else self.ambient.reduce(inverse_word(w))

    def evaluate(self, expr: Expr) -> Word:
        out = []
        for s in expr:
            out.extend(self.symbol_word(s))
        return self.ambient.reduce(tuple(out))

    def format_expr(self, expr: Expr) -> str:
        if not expr:
            return "e"
        return " ".join(f"h{abs(s) - 1}" + ("'" if s < 0 else "") for s in expr)

    def parse_expr(self, text: str) -> Expr:
        out = []
        for tok in text.split():
            if tok == "e":
                continue
            inv = tok.endswith("'")
            i = int(tok.rstrip("'")[1:])
            if not 0 <= i < len(self.generators):
                raise ValueError(f"generator h{i} out of range")
            out.append(-(i + 1) if inv else i + 1)
        return tuple(out)

    def gen_strings(self) -> list[str]:
        return [self.ambient.format_word(w) for w in self.generators]

    def level_group(self, n: int, budget: Budget = DEFAULT_BUDGET) -> PermGroup:
        """The image of the subgroup in the level-n quotient."""
        key = ("level", n)
        if key not in self._cache:
            k = self.ambient.alphabet_size
            self._cache[key] = PermGroup(
                [self.ambient.level_perm(w, n, budget) for w in self.generators], k ** n)
        return self._cache[key]

    def with_generators(self, words: Sequence, name: Optional[str] = None,
                        budget: Budget = DEFAULT_BUDGET) -> "FgSubgroup":
        return FgSubgroup.make(self.ambient, list(self.generators) + list(words),
                               name or self.name, budget)

    def __str__(self) -> str:
        gens = ";".join(self.gen_strings()) or "e"
        return f"{self.name}=<{gens}>" if self.name else f"<{gens}>"

    def __repr__(self) -> str:
        return f"FgSubgroup({self})"


# -- orbits and Schreier generators -----------------------------------------

@dataclass
class SchreierData:
    """Orbit of a start point with transversal expressions and Schreier generators."""

    orbit: list                    # states in BFS order; orbit[0] is the start
    transversal: dict              # state -> expression mapping the start to it
    schreier: list                 # (expression, reduced word) pairs, nontrivial, deduplicated
    edges: dict                    # (state, symbol) -> state
    raw_count: int = 0             # orbit size times generator count, before dropping
    apply: Optional[Callable] = None


def orbit_schreier(H: FgSubgroup, start: Hashable,
                   apply: Callable[[Word, Hashable], Hashable],
                   limit: int, budget: Budget = DEFAULT_BUDGET, collect: bool = True) -> SchreierData:
    """Breadth-first orbit of ``start`` under H, then Schreier generators.

    ``apply(word, state)`` is the left action.  Transversal expressions are
    shortest in BFS order over (generators, then inverses).
    """
    grp = H.ambient
    syms = H.symbols()
    trans = {start: ()}
    orbit = [start]
    edges = {}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        for s in syms:
            q = apply(H.symbol_word(s), p)
            edges[(p, s)] = q
            if q not in trans:
                if len(trans) >= limit:
                    raise BudgetExceeded(f"orbit larger than {limit}")
                trans[q] = (s,) + trans[p]
                orbit.append(q)
                queue.append(q)
    data = SchreierData(orbit, trans, [], edges, len(orbit) * len(H.generators))
    if collect:
        data.schreier = list(iter_schreier(H, data, apply, budget))
    return data


def iter_schreier(H: FgSubgroup, data: SchreierData, apply: Callable,
                  budget: Budget = DEFAULT_BUDGET):
    """Nontrivial, pairwise distinct Schreier generators in orbit order, lazily."""
    grp = H.ambient
    trans, edges = data.transversal, data.edges
    seen = set()
    for p in data.orbit:
        for i in range(len(H.generators)):
            s = i + 1
            q = edges.get((p, s))
            if q is None:
                q = apply(H.symbol_word(s), p)
            expr = _free(inverse_word(trans[q]) + (s,) + trans[p])
            w = H.evaluate(expr)
            if not w or w in seen:
                continue
            seen.add(w)
            if grp.is_trivial(w, budget):
                continue
            yield expr, w


def bfs_schreier(H: FgSubgroup, start: Hashable, apply: Callable, limit: int,
                 budget: Budget = DEFAULT_BUDGET):
    """Schreier generators produced while the orbit is still being explored.

    Yields (expression, word) for non-tree edges of positive generators, so a
    prefix is available long before a large orbit is exhausted.
    """
    grp = H.ambient
    syms = H.symbols()
    trans = {start: ()}
    queue = deque([start])
    seen = set()
    while queue:
        p = queue.popleft()
        for s in syms:
            q = apply(H.symbol_word(s), p)
            if q not in trans:
                if len(trans) >= limit:
                    raise BudgetExceeded(f"orbit larger than {limit}")
                trans[q] = (s,) + trans[p]
                queue.append(q)
                continue
            if s < 0:
                continue
            expr = _free(inverse_word(trans[q]) + (s,) + trans[p])
            w = H.evaluate(expr)
            if not w or w in seen:
                continue
            seen.add(w)
            if grp.is_trivial(w, budget):
                continue
            yield expr, w


def _free(expr: Expr) -> Expr:
    out = []
    for s in expr:
        if out and out[-1] == -s:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def vertex_tuple_action(grp: GroupDef, vertices: Sequence[Vertex]):
    """Start state and action for H acting on the tuple of ``vertices``."""
    start = tuple(v.letters for v in vertices)
    cache: dict = {}

    def apply(word: Word, state):
        out = []
        for letters in state:
            key = (word, letters)
            img = cache.get(key)
            if img is None:
                img = grp.act_word(word, letters)[0]
                cache[key] = img
            out.append(img)
        return tuple(out)

    return start, apply


def stabilizer_data(H: FgSubgroup, Y: LeafSet, budget: Budget = DEFAULT_BUDGET,
                    collect: bool = True) -> SchreierData:
    key = ("stab", Y, collect)
    if key not in H._cache:
        start, apply = vertex_tuple_action(H.ambient, Y.sorted())
        limit = budget.closure_limit if collect else budget.orbit_limit
        data = orbit_schreier(H, start, apply, limit, budget, collect)
        data.apply = apply
        H._cache[key] = data
    return H._cache[key]


def rewrite(data: SchreierData, H: FgSubgroup, expr: Expr,
            apply: Optional[Callable] = None) -> Expr:
    """Reidemeister-Schreier rewriting of an H-expression fixing the start point.

    Returns an expression over the Schreier generator list of ``data`` (index
    i+1 = data.schreier[i]) whose evaluation equals the input element.
    Trivial Schreier generators contribute nothing.
    """
    index = {}
    for j, (e, w) in enumerate(data.schreier):
        index[w] = j + 1
    grp = H.ambient
    out = []
    p = data.orbit[0]
    for s in reversed(expr):
        if s > 0:
            q = data.edges.get((p, s))
            if q is None:
                q = apply(H.symbol_word(s), p)
            sig = H.evaluate(_free(inverse_word(data.transversal[q]) + (s,) + data.transversal[p]))
            sign = 1
        else:
            # s^-1 t_p = t_q sigma(q, s)^-1 with s q = p
            q = data.edges.get((p, s))
            if q is None:
                q = apply(H.symbol_word(s), p)
            sig = H.evaluate(_free(inverse_word(data.transversal[p]) + (-s,) + data.transversal[q]))
            sign = -1
        if sig:
            j = index.get(sig)
            if j is None:
                raise ValueError("Schreier generator missing from the generator list")
            out.append(sign * j)
        p = q
    if p != data.orbit[0]:
        raise ValueError("expression does not stabilize the start point")
    return tuple(reversed(out))
