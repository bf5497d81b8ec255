"""Depth chains, Cantor-Bendixson rank classification, the Grigorchuk-Nagnibeda
alternative, and basic Chabauty neighborhoods.

The CB rank is never computed as a transfinite derivative.  A finitely
generated subgroup with an infra-direct leaf stabilizer has rank equal to its
depth, reported as an interval [lower, upper]; the lower end comes from chain
steps whose index traces keep growing, the upper end from a complete lower
leaf system.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .config import DEFAULT_BUDGET, Budget, BudgetExceeded
from .fgsub import Expr, FgSubgroup
from .leafsys import LowerLeafSystem, build_lower_leaf_system
from .ssgroup import Element, GroupDef, Word
from .subgroup import (_coordinate_finiteness, certify_some_level, coordinate_sample,
                       finiteness_verdict, infra_direct_verdict)
from .tree import LeafSet, Vertex, level_vertices
from .verdict import MalformedCertificate, Verdict
from .witness import MembershipWitness, excluded_at, find_witness


# -- depth chains -----------------------------------------------------------

@dataclass
class DepthChain:
    """H_0 = G ⊇ H_1 ⊇ … ⊇ H_n with per-generator containment witnesses.

    ``witnesses[i]`` holds, for every generator of H_{i+1}, an expression over
    the generators of H_i.
    """

    group: GroupDef
    subgroups: list
    witnesses: list = field(default_factory=list)
    infinite_index_evidence: list = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.subgroups) - 1

    def as_dict(self) -> dict:
        return {"subgroups": [H.gen_strings() for H in self.subgroups],
                "witnesses": [[H.format_expr(e) for e in ws]
                              for H, ws in zip(self.subgroups, self.witnesses)]}

    @classmethod
    def from_dict(cls, group: GroupDef, data: dict) -> "DepthChain":
        subs = [FgSubgroup(group, tuple(group.parse_word(w) for w in gens), f"H{i}")
                for i, gens in enumerate(data["subgroups"])]
        wits = [[H.parse_expr(e) for e in ws] for H, ws in zip(subs, data.get("witnesses", []))]
        return cls(group, subs, wits)


def step_index_trace(upper: FgSubgroup, lower: FgSubgroup, budget: Budget = DEFAULT_BUDGET
                     ) -> dict:
    """|π_n(upper) : π_n(lower)| for n up to the evidence level, with a growth flag."""
    grp = upper.ambient
    levels = list(range(1, budget.evidence_level(grp.alphabet_size) + 1))
    trace = [upper.level_group(n, budget).order() // lower.level_group(n, budget).order()
             for n in levels]
    w = min(budget.growth_window, len(trace) - 1)
    tail = trace[-(w + 1):]
    growing = w > 0 and all(a < b for a, b in zip(tail, tail[1:]))
    return {"levels": levels, "index": trace, "strictly_growing": growing, "window": w}


def build_depth_chain(group: GroupDef, subgroups: Sequence[FgSubgroup],
                      budget: Budget = DEFAULT_BUDGET) -> DepthChain:
    """Witness every containment H_{i+1} ≤ H_i; H_0 must generate G by letters."""
    subs = list(subgroups)
    if not subs or set(subs[0].generators) != {(i + 1,) for i in range(group.rank)}:
        subs = [FgSubgroup.whole(group)] + subs
    wits, evidence = [], []
    for upper, lower in zip(subs, subs[1:]):
        step = []
        for g in lower.generators:
            e = find_witness(upper, g, budget)
            if e is None:
                raise ValueError(f"no witness for {group.format_word(g)} in the previous subgroup")
            step.append(e)
        wits.append(step)
        evidence.append(step_index_trace(upper, lower, budget))
    return DepthChain(group, subs, wits, evidence)


def verify_depth_chain(chain: DepthChain, budget: Budget = DEFAULT_BUDGET) -> Verdict:
    """Proved for the containments; infinite index per step stays evidence-grade.

    A step whose lower subgroup contains a certified level stabilizer has
    finite index, and its sub-verdict is Refuted with that certificate.
    Raises MalformedCertificate when a witness fails to replay.
    """
    grp = chain.group
    if len(chain.witnesses) != chain.length:
        raise MalformedCertificate("one witness list per step is required")
    for upper, lower, ws in zip(chain.subgroups, chain.subgroups[1:], chain.witnesses):
        if len(ws) != len(lower.generators):
            raise MalformedCertificate("one witness per generator is required")
        for g, e in zip(lower.generators, ws):
            if not MembershipWitness(g, e).check(upper, budget):
                raise MalformedCertificate(f"witness for {grp.format_word(g)} does not replay")
    steps = []
    for i, (upper, lower) in enumerate(zip(chain.subgroups, chain.subgroups[1:])):
        trace = step_index_trace(upper, lower, budget)
        fin = certify_some_level(lower, budget) if not trace["strictly_growing"] else None
        if fin is not None and fin.is_proved:
            sub = Verdict.refuted({"kind": "finite_index_step", "step": i,
                                   "containment": fin.certificate}, trace=trace)
        else:
            sub = Verdict.unknown({"infinite_index": "evidence", "step": i}, trace=trace)
        steps.append(sub)
    growing = sum(1 for s in steps if s.evidence["trace"]["strictly_growing"])
    cert = {"kind": "chain", **chain.as_dict()}
    return Verdict.proved(cert, steps=[s.as_dict() for s in steps], growing_steps=growing,
                          depth_evidence=growing if growing == chain.length else None)


def depth_upper_bound(H: FgSubgroup, system: LowerLeafSystem) -> int:
    """2^{|Y_n|} for the final leaf set of a complete lower leaf system of H."""
    if not system.complete:
        raise ValueError("the lower leaf system is incomplete")
    return 2 ** len(system.final)


# -- case (a): a finite section ---------------------------------------------

def finite_section_at(H: FgSubgroup, y: Vertex, budget: Budget = DEFAULT_BUDGET) -> Optional[dict]:
    """A certificate that ψ_y(st_H(y)) is finite, if enumeration closes."""
    if y.level == 0:
        v = finiteness_verdict(H, budget)
        if not v.is_proved:
            return None
        return {"kind": "finite_section", "subgroup": H.gen_strings(), "leafset": "",
                "vertex": str(y), "finite": v.certificate}
    return _coordinate_finiteness(H, LeafSet([y], y.alphabet_size), y, budget)


def case_a_search(H: FgSubgroup, budget: Budget = DEFAULT_BUDGET,
                  max_level: Optional[int] = None) -> tuple[Optional[Vertex], Optional[dict]]:
    """Vertices in breadth-first order up to ``max_level``; the first finite section wins."""
    key = ("case_a", budget, max_level)
    if key in H._cache:
        return H._cache[key]
    k = H.ambient.alphabet_size
    top = budget.case_a_level if max_level is None else max_level
    found = (None, None)
    for n in range(top + 1):
        for y in level_vertices(k, n):
            try:
                cert = finite_section_at(H, y, budget)
            except BudgetExceeded:
                cert = None
            if cert is not None:
                found = (y, cert)
                break
        if found[0] is not None:
            break
    H._cache[key] = found
    return found


# -- the Grigorchuk-Nagnibeda alternative -----------------------------------

@dataclass
class GNResult:
    case: str                       # "a", "b" or "unknown"
    vertex: Optional[Vertex] = None
    leafset: Optional[LeafSet] = None
    verdict: Optional[Verdict] = None
    bound: Optional[dict] = None

    def as_dict(self) -> dict:
        out: dict = {"case": self.case}
        if self.vertex is not None:
            out["vertex"] = str(self.vertex)
        if self.leafset is not None:
            out["leafset"] = str(self.leafset)
        if self.verdict is not None:
            out["verdict"] = self.verdict.as_dict()
        if self.bound is not None:
            out["bound"] = self.bound
        return out


def _prefix(x: int, Y: LeafSet, k: int) -> list[Vertex]:
    return [Vertex((x,) + v.letters, k) for v in Y.sorted()]


def _gn_leafset(H: FgSubgroup, budget: Budget, depth: int):
    """Y with st_H(Y) expected infra-direct, or a case (a) vertex, or None."""
    y, cert = case_a_search(H, budget)
    if y is not None:
        return "a", y
    if certify_some_level(H, budget).is_proved:
        return "b", LeafSet([Vertex((), H.ambient.alphabet_size)], H.ambient.alphabet_size)
    if depth >= budget.gn_depth:
        return None, None
    grp = H.ambient
    k = grp.alphabet_size
    X1 = LeafSet.full_level(k, 1)
    parts = []
    for x in range(k):
        C, complete = coordinate_sample(H, X1, Vertex((x,), k), budget.closure_limit, budget)
        if not complete:
            return None, None
        kind, sub = _gn_leafset(C, budget, depth + 1)
        if kind is None:
            return None, None
        if kind == "a":
            return "a", Vertex((x,) + sub.letters, k)
        parts.extend(_prefix(x, sub, k))
    return "b", LeafSet(parts, k)


def gn_classify(H: FgSubgroup, budget: Budget = DEFAULT_BUDGET) -> GNResult:
    """Case (a): a vertex with finite section; case (b): Y with st_H(Y) infra-direct.

    First-level coordinates of st_H(X^1) are classified recursively; a
    coordinate containing a certified level stabilizer contributes the root.
    Recursion deeper than ``gn_depth`` gives Unknown.
    """
    key = ("gn", budget)
    if key in H._cache:
        return H._cache[key]
    try:
        kind, found = _gn_leafset(H, budget, 0)
    except BudgetExceeded as exc:
        kind, found = None, str(exc)
    if kind == "a":
        cert = finite_section_at(H, found, budget)
        if cert is None:
            res = GNResult("unknown", bound={"reason": "section finite below a stabilizer only",
                                             "vertex": str(found)})
        else:
            res = GNResult("a", vertex=found, verdict=Verdict.proved(cert))
    elif kind == "b":
        k = H.ambient.alphabet_size
        Y = found
        if Y.depth == 0:
            # H itself has finite index; X^1 is the canonical leaf set
            Y = LeafSet.full_level(k, 1)
        v = infra_direct_verdict(H, Y, budget)
        if v.is_proved:
            res = GNResult("b", leafset=Y, verdict=v)
        else:
            res = GNResult("unknown", leafset=Y, verdict=v,
                           bound={"reason": "infra-direct not certified", "leafset": str(Y)})
    else:
        res = GNResult("unknown", bound={"gn_depth": budget.gn_depth,
                                         **({"error": found} if isinstance(found, str) else {})})
    H._cache[key] = res
    return res


# -- rank classification ----------------------------------------------------

@dataclass
class RankClassification:
    kind: str                       # FiniteIndex, FiniteRank, PerfectKernel, Unknown
    rank: Optional[int] = None
    depth_interval: Optional[tuple] = None
    case: Optional[str] = None      # for PerfectKernel: "finite-section" or "not-f.g."
    vertex: Optional[Vertex] = None
    leafset: Optional[LeafSet] = None
    verdicts: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)

    @property
    def decided(self) -> bool:
        return self.kind != "Unknown"

    def as_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.rank is not None:
            out["rank"] = self.rank
        if self.depth_interval is not None:
            out["depth_interval"] = list(self.depth_interval)
        if self.case is not None:
            out["case"] = self.case
        if self.vertex is not None:
            out["vertex"] = str(self.vertex)
        if self.leafset is not None:
            out["leafset"] = str(self.leafset)
        if self.verdicts:
            out["verdicts"] = {k: v.as_dict() for k, v in self.verdicts.items()}
        if self.evidence:
            out["evidence"] = self.evidence
        return out


def _check_hypotheses(grp: GroupDef) -> None:
    if not grp.hypotheses:
        raise ValueError("the ambient group is not marked as satisfying the standing hypotheses")


def classify(H: Optional[FgSubgroup], budget: Budget = DEFAULT_BUDGET,
             finitely_generated: bool = True, group: Optional[GroupDef] = None
             ) -> RankClassification:
    """Decision tree: finite index, finite section, infra-direct leaf stabilizer, Unknown.

    Pass ``finitely_generated=False`` (with ``group``) for a subgroup known only
    to be infinitely generated; such subgroups lie in the perfect kernel.
    """
    grp = group if H is None else H.ambient
    _check_hypotheses(grp)
    if not finitely_generated:
        return RankClassification("PerfectKernel", case="not-f.g.",
                                  evidence={"reason": "not finitely generated"})
    fi = certify_some_level(H, budget)
    if fi.is_proved:
        return RankClassification("FiniteIndex", rank=0, verdicts={"finite_index": fi})
    gn = gn_classify(H, budget)
    if gn.case == "a":
        return RankClassification("PerfectKernel", case="finite-section", vertex=gn.vertex,
                                  verdicts={"finite_section": gn.verdict})
    if gn.case != "b":
        return RankClassification("Unknown", evidence={"finite_index": fi.bound,
                                                       "gn": gn.as_dict()})
    Y = gn.leafset
    system = build_lower_leaf_system(H, Y, budget, check_infra=False)
    verdicts = {"infra_direct": gn.verdict}
    if not system.complete:
        return RankClassification("Unknown", leafset=Y, verdicts=verdicts,
                                  evidence={"lower_system": system.as_dict()})
    upper = depth_upper_bound(H, system)
    chain = build_depth_chain(grp, [H], budget)
    cv = verify_depth_chain(chain, budget)
    lower = cv.evidence["growing_steps"]
    verdicts["chain"] = cv
    return RankClassification(
        "FiniteRank", depth_interval=(lower, upper), leafset=Y, verdicts=verdicts,
        evidence={"lower_system": {"final": str(system.final), "size": len(system.final),
                                   "stages": [s.as_dict() for s in system.stages]},
                  "index_trace": cv.evidence["steps"][0]["evidence"]["trace"]})


# -- Chabauty neighborhoods -------------------------------------------------

def neighborhood_contains(H: FgSubgroup, A: Sequence, C: Sequence,
                          budget: Budget = DEFAULT_BUDGET) -> Verdict:
    """Is H in O_{A,C}: every c ∈ C in H and every a ∈ A outside H?

    Membership is certified by witnesses, exclusion by a separating quotient.
    """
    grp = H.ambient
    A = [_word(grp, a) for a in A]
    C = [_word(grp, c) for c in C]
    for a in A:
        for c in C:
            if grp.is_trivial(a + tuple(-s for s in reversed(c)), budget):
                return Verdict.refuted({"kind": "neighborhood", "reason": "contradictory",
                                        "subgroup": H.gen_strings(),
                                        "avoid": grp.format_word(a),
                                        "contain": grp.format_word(c)})
    excl, wits, open_ = [], [], []
    for c in C:
        n = excluded_at(H, c, budget)
        if n is not None:
            return Verdict.refuted({"kind": "neighborhood", "reason": "required element excluded",
                                    "subgroup": H.gen_strings(),
                                    "excluded": {"element": grp.format_word(c), "level": n}})
        e = find_witness(H, c, budget)
        if e is None:
            open_.append(grp.format_word(c))
        else:
            wits.append({"target": grp.format_word(c), "expression": H.format_expr(e)})
    for a in A:
        e = find_witness(H, a, budget) if excluded_at(H, a, budget) is None else None
        if e is not None:
            return Verdict.refuted({"kind": "neighborhood", "reason": "forbidden element inside",
                                    "subgroup": H.gen_strings(),
                                    "witness": {"target": grp.format_word(a),
                                                "expression": H.format_expr(e)}})
        n = excluded_at(H, a, budget)
        if n is None:
            open_.append(grp.format_word(a))
        else:
            excl.append({"element": grp.format_word(a), "level": n})
    if open_:
        return Verdict.unknown({"undecided": open_, "witness_depth": budget.witness_depth})
    return Verdict.proved({"kind": "neighborhood", "reason": "member",
                           "subgroup": H.gen_strings(), "witnesses": wits, "excluded": excl})


def _word(grp: GroupDef, x) -> Word:
    if isinstance(x, Element):
        return x.word
    if isinstance(x, str):
        return grp.parse_word(x)
    return grp.reduce(tuple(x))
