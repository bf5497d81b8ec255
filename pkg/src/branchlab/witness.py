"""Membership witnesses: bounded searches for subgroup expressions of target elements.

A ball is grown breadth first over words in a subgroup's generators.  Elements
are deduplicated exactly: candidates are bucketed by their permutation at a
hash level and compared with the bisimulation oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import perm as P
from .config import DEFAULT_BUDGET, Budget
from .fgsub import Expr, FgSubgroup
from .ssgroup import GroupDef, Word, inverse_word


@dataclass(frozen=True)
class MembershipWitness:
    target: Word
    expression: Expr

    def check(self, H: FgSubgroup, budget: Budget = DEFAULT_BUDGET) -> bool:
        grp = H.ambient
        w = H.evaluate(self.expression)
        return grp.is_trivial(inverse_word(w) + tuple(self.target), budget)

    def as_dict(self, H: FgSubgroup) -> dict:
        return {"target": H.ambient.format_word(self.target),
                "expression": H.format_expr(self.expression)}


def hash_level(grp: GroupDef, budget: Budget) -> int:
    return min(budget.max_level(grp.alphabet_size), 8 if grp.alphabet_size == 2 else 5)


class WordBall:
    """Distinct elements of H reachable by short generator words."""

    def __init__(self, H: FgSubgroup, budget: Budget = DEFAULT_BUDGET, level: Optional[int] = None):
        self.H = H
        self.grp = H.ambient
        self.budget = budget
        self.level = hash_level(self.grp, budget) if level is None else level
        self.syms = H.symbols()
        self.sym_words = {s: H.symbol_word(s) for s in self.syms}
        self.sym_perms = {s: self.grp.level_perm(self.sym_words[s], self.level, budget)
                          for s in self.syms}
        e = P.identity(self.grp.alphabet_size ** self.level)
        self.words: list[Word] = [()]
        self.exprs: list[Expr] = [()]
        self.perms: list[np.ndarray] = [e]
        self.by_word: dict = {(): 0}
        self.by_perm: dict = {P.key(e): [0]}
        self.frontier = [0]
        self.depth = 0
        self.exhausted = False

    def __len__(self) -> int:
        return len(self.words)

    @property
    def full(self) -> bool:
        return (self.exhausted or self.depth >= self.budget.witness_depth
                or len(self.words) >= self.budget.ball_size)

    def _match(self, word: Word, pk: bytes, check: Optional[Callable] = None) -> Optional[int]:
        for i in self.by_perm.get(pk, ()):
            if check is not None:
                if check(self.words[i]):
                    return i
            elif self.grp.is_trivial(inverse_word(self.words[i]) + word, self.budget):
                return i
        return None

    def grow(self) -> bool:
        """Add one more layer; False when nothing can be added."""
        if self.full:
            return False
        nxt = []
        for i in self.frontier:
            for s in self.syms:
                if self.exprs[i] and self.exprs[i][-1] == -s:
                    continue
                w = self.grp.reduce(self.words[i] + self.sym_words[s])
                if w in self.by_word:
                    continue
                p = self.perms[i][self.sym_perms[s]]
                pk = P.key(p)
                j = self._match(w, pk)
                if j is not None:
                    self.by_word[w] = j
                    continue
                j = len(self.words)
                self.words.append(w)
                self.exprs.append(self.exprs[i] + (s,))
                self.perms.append(p)
                self.by_word[w] = j
                self.by_perm.setdefault(pk, []).append(j)
                nxt.append(j)
                if len(self.words) >= self.budget.ball_size:
                    break
            if len(self.words) >= self.budget.ball_size:
                break
        self.depth += 1
        self.frontier = nxt
        if not nxt:
            self.exhausted = True
        return bool(nxt)

    def lookup(self, word: Word) -> Optional[Expr]:
        word = self.grp.reduce(tuple(word))
        i = self.by_word.get(word)
        if i is None:
            pk = P.key(self.grp.level_perm(word, self.level, self.budget))
            i = self._match(word, pk)
            if i is None:
                return None
            self.by_word[word] = i
        return self.exprs[i]

    def lookup_perm(self, p: np.ndarray, check: Callable[[Word], bool]) -> Optional[Expr]:
        i = self._match((), P.key(p), check)
        return None if i is None else self.exprs[i]

    def search(self, word: Word) -> Optional[Expr]:
        while True:
            e = self.lookup(word)
            if e is not None or not self.grow():
                return e


def ball_for(H: FgSubgroup, budget: Budget = DEFAULT_BUDGET) -> WordBall:
    key = ("ball", budget)
    b = H._cache.get(key)
    if b is None:
        b = WordBall(H, budget)
        H._cache[key] = b
    return b


def excluded_at(H: FgSubgroup, word: Word, budget: Budget = DEFAULT_BUDGET) -> Optional[int]:
    """Least level (within the evidence range) whose quotient separates ``word`` from H."""
    grp = H.ambient
    for n in range(1, budget.evidence_level(grp.alphabet_size) + 1):
        if not H.level_group(n, budget).contains(grp.level_perm(word, n, budget)):
            return n
    return None


def find_witness(H: FgSubgroup, word: Word, budget: Budget = DEFAULT_BUDGET) -> Optional[Expr]:
    """An H-expression equal to ``word``, or None within budget.

    Tries, in order: a generator, letter substitution when H contains every
    generator of G as a generator, then the ball search.
    """
    grp = H.ambient
    word = grp.reduce(tuple(word))
    if not word:
        return ()
    for i, g in enumerate(H.generators):
        if g == word:
            return (i + 1,)
        if grp.reduce(inverse_word(g)) == word:
            return (-(i + 1),)
    sub = _letter_substitution(H)
    if sub is not None:
        out = []
        for s in word:
            out.extend(sub[abs(s)] if s > 0 else [-x for x in reversed(sub[abs(s)])])
        return tuple(out)
    return ball_for(H, budget).search(word)


def _letter_substitution(H: FgSubgroup) -> Optional[dict]:
    where = {g: i for i, g in enumerate(H.generators)}
    out = {}
    for j in range(H.ambient.rank):
        i = where.get((j + 1,))
        if i is None:
            return None
        out[j + 1] = (i + 1,)
    return out


def witnesses(H: FgSubgroup, targets, budget: Budget = DEFAULT_BUDGET):
    """Witness every target or return (None, first failing target)."""
    out = []
    for t in targets:
        e = find_witness(H, t, budget)
        if e is None:
            return None, t
        out.append(MembershipWitness(tuple(t), e))
    return out, None
