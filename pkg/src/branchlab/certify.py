"""Self-contained reports and independent replay of their certificates.

A report embeds the group definition text and its sha256, so it can be
verified without the session that produced it.  Verification walks the
report, replays every certificate attached to a Proved or Refuted verdict (and
every stage certificate), and recomputes any derived data such as Schreier
targets from scratch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
import yaml

from .config import DEFAULT_BUDGET, Budget, BudgetExceeded
from .fgsub import FgSubgroup
from .rank import DepthChain
from .ssgroup import GroupDef, Word, builtin, inverse_word, parse_group
from .subgroup import _coset_targets, _stab_targets, coordinate_sample
from .tree import LeafSet, Vertex, spanning_depth
from .verdict import MalformedCertificate

REPORT_VERSION = 1


def make_report(group: GroupDef, command: str, result: Any) -> dict:
    return {"branchlab_report": REPORT_VERSION, "command": command,
            "group": {"name": group.name or "custom", "definition": group.to_text(),
                      "sha256": group.digest()},
            "result": result}


# the libyaml bindings are much faster on large reports
_BaseDumper = getattr(yaml, "CSafeDumper", yaml.SafeDumper)
_Loader = getattr(yaml, "CSafeLoader", yaml.SafeLoader)


class _Dumper(_BaseDumper):
    pass


def _str(dumper, data):
    style = "|" if "\n" in data else None
    return dumper.represent_scalar("tag:yaml.org,2002:str", data, style=style)


_Dumper.add_representer(str, _str)


def dump(report: dict) -> str:
    return yaml.dump(report, Dumper=_Dumper, sort_keys=True, allow_unicode=True, width=100)


def load(text: str) -> dict:
    data = yaml.load(text, Loader=_Loader)
    if not isinstance(data, dict) or "branchlab_report" not in data:
        raise MalformedCertificate("not a branchlab report")
    return data


def report_group(report: dict) -> GroupDef:
    g = report.get("group") or {}
    text = g.get("definition")
    if not text:
        raise MalformedCertificate("report does not embed a group definition")
    grp = parse_group(text, g.get("name"))
    if grp.digest() != g.get("sha256"):
        raise MalformedCertificate("group definition does not match its sha256")
    # built-ins come with frozen embedding tables; reuse them when the text agrees
    try:
        b = builtin(g.get("name", ""))
        if b.digest() == grp.digest():
            return b
    except (KeyError, ValueError):
        pass
    return grp


# -- replay -----------------------------------------------------------------

@dataclass
class Check:
    path: str
    kind: str
    ok: bool
    message: str = ""


@dataclass
class VerifyResult:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]

    def as_dict(self) -> dict:
        return {"checked": len(self.checks), "failed": len(self.failures),
                "checks": [{"path": c.path, "kind": c.kind, "ok": c.ok,
                            **({"message": c.message} if c.message else {})}
                           for c in self.checks]}


class Verifier:
    """Replays certificates over one group."""

    def __init__(self, group: GroupDef, budget: Budget = DEFAULT_BUDGET):
        self.grp = group
        self.budget = budget
        self.handlers: dict[tuple[str, str], Callable[[dict], None]] = {
            ("proved", "trivial"): self._trivial,
            ("proved", "equal"): self._equal,
            ("refuted", "moves"): self._moves,
            ("refuted", "differ"): self._differ,
            ("proved", "finite"): self._finite,
            ("proved", "level_containment"): self._containment,
            ("proved", "coordinate"): self._coordinate,
            ("proved", "infra_direct"): self._infra,
            ("refuted", "finite_section"): self._finite_section,
            ("proved", "finite_section"): self._finite_section,
            ("proved", "kernel_element"): self._kernel,
            ("proved", "chain"): self._chain,
            ("refuted", "finite_index_step"): self._finite_index_step,
            ("proved", "neighborhood"): self._neighborhood,
            ("refuted", "neighborhood"): self._neighborhood,
            ("proved", "membership"): self._membership,
            ("refuted", "excluded"): self._excluded,
        }

    # helpers
    def word(self, text: str) -> Word:
        return self.grp.reduce(self.grp.parse_word(text))

    def subgroup(self, gens) -> FgSubgroup:
        return FgSubgroup(self.grp, tuple(self.word(w) for w in gens))

    def same(self, u: Word, v: Word) -> bool:
        return self.grp.is_trivial(inverse_word(u) + tuple(v), self.budget)

    def vertex(self, text: str) -> Vertex:
        return Vertex.parse(text, self.grp.alphabet_size)

    def leafset(self, text: str) -> LeafSet:
        return LeafSet.parse(text, self.grp.alphabet_size)

    @staticmethod
    def require(cond: bool, message: str) -> None:
        if not cond:
            raise MalformedCertificate(message)

    def check(self, cert: dict, status: str = "proved") -> None:
        if not isinstance(cert, dict) or "kind" not in cert:
            raise MalformedCertificate("certificate without a kind")
        h = self.handlers.get((status, cert["kind"]))
        if h is None:
            raise MalformedCertificate(f"no replay for a {status} {cert['kind']} certificate")
        h(cert)

    # word problem
    def _closed_states(self, word: Word, states, trusted: bool) -> None:
        grp = self.grp
        S = {grp.reduce(grp.parse_word(s), trusted) for s in states} | {()}
        w = grp.reduce(word, trusted)
        self.require(w in S, "the word is not among the states")
        ident = tuple(range(grp.alphabet_size))
        for s in S:
            if not s:
                continue
            perm, secs = grp._expand_uncached(s, trusted)
            self.require(perm == ident, f"state {grp.format_word(s)} moves a letter")
            for sec in secs:
                self.require(sec in S, f"section of {grp.format_word(s)} leaves the state set")

    def _trivial(self, c: dict) -> None:
        self._closed_states(self.grp.parse_word(c["word"]), c["states"], c["reduction"] == "rules")

    def _equal(self, c: dict) -> None:
        w = inverse_word(self.grp.parse_word(c["lhs"])) + self.grp.parse_word(c["rhs"])
        self._closed_states(w, c["states"], c["reduction"] == "rules")

    def _moves(self, c: dict) -> None:
        v = self.vertex(c["vertex"])
        img, _ = self.grp.act_word(self.grp.parse_word(c["word"]), v.letters)
        self.require(img != v.letters, "the word fixes the claimed vertex")

    def _differ(self, c: dict) -> None:
        v = self.vertex(c["vertex"])
        a = self.grp.act_word(self.grp.parse_word(c["lhs"]), v.letters)[0]
        b = self.grp.act_word(self.grp.parse_word(c["rhs"]), v.letters)[0]
        self.require(a != b, "the words agree on the claimed vertex")

    # finiteness
    def _finite(self, c: dict) -> None:
        grp = self.grp
        H = self.subgroup(c["generators"])
        elems = [self.word(e) for e in c["elements"]]
        self.require(bool(elems) and elems[0] == (), "the element list must start with e")
        syms = H.symbols()
        seen = set()
        for i, s, j in c["closure"]:
            self.require(s in syms and 0 <= i < len(elems) and 0 <= j < len(elems),
                         "closure entry out of range")
            self.require(self.same(grp.reduce(elems[i] + H.symbol_word(s)), elems[j]),
                         "closure entry does not replay")
            seen.add((i, s))
        self.require(seen == {(i, s) for i in range(len(elems)) for s in syms},
                     "closure table is incomplete")
        if c.get("order") is not None:
            n = c["distinct_level"]
            keys = {grp.level_perm(e, n, self.budget).tobytes() for e in elems}
            self.require(len(keys) == len(elems) == c["order"], "elements are not distinct")

    def _membership(self, c: dict) -> None:
        H = self.subgroup(c["subgroup"])
        w = H.evaluate(H.parse_expr(c["expression"]))
        self.require(self.same(w, self.word(c["target"])), "membership witness does not replay")

    def _excluded(self, c: dict) -> None:
        H = self.subgroup(c["subgroup"])
        n = int(c["level"])
        p = self.grp.level_perm(self.word(c["element"]), n, self.budget)
        self.require(not H.level_group(n, self.budget).contains(p),
                     "the quotient does not separate the element")

    # containment of level stabilizers
    def _containment(self, c: dict) -> None:
        grp = self.grp
        C = self.subgroup(c["subgroup"])
        m = int(c["level"])
        if c["method"] == "coset":
            targets = _coset_targets(C, m, self.budget)
        elif c["method"] == "stabilizer":
            if "base" in c:
                self._containment(c["base"])
                self.require(int(c["base"]["level"]) <= m, "base level above the target level")
                B = self.subgroup(c["base"]["subgroup"])
            else:
                B = FgSubgroup.whole(grp)
            targets = _stab_targets(B, m, self.budget)
        else:
            raise MalformedCertificate(f"unknown containment method {c['method']}")
        self.require([grp.format_word(t) for t in targets] == list(c["targets"]),
                     "targets differ from the recomputed Schreier generators")
        self.require(len(c["witnesses"]) == len(targets), "one witness per target is required")
        for t, e in zip(targets, c["witnesses"]):
            self.require(self.same(C.evaluate(C.parse_expr(e)), t),
                         f"witness for {grp.format_word(t)} does not replay")

    def _coordinate(self, c: dict) -> None:
        grp = self.grp
        H = self.subgroup(c["subgroup"])
        Y = self.leafset(c["leafset"])
        y = self.vertex(c["vertex"])
        self.require(y in Y, "coordinate vertex outside the leaf set")
        gens = [self.word(g) for g in c["generators"]]
        self.require(len(gens) == len(c["lifts"]), "one lift per generator is required")
        for g, e in zip(gens, c["lifts"]):
            h = H.evaluate(H.parse_expr(e))
            for v in Y:
                self.require(grp.act_word(h, v.letters)[0] == v.letters,
                             f"lift moves {v}")
            self.require(self.same(grp.section_word(h, y.letters), g),
                         "lift section differs from the generator")
        inner = c["containment"]
        self.require(list(inner["subgroup"]) == list(c["generators"]),
                     "containment is about another subgroup")
        self._containment(inner)

    def _infra(self, c: dict) -> None:
        Y = self.leafset(c["leafset"])
        self.require(spanning_depth(Y) is not None, "leaf set is not spanning")
        got = {}
        for cc in c["coordinates"]:
            self.require(list(cc["subgroup"]) == list(c["subgroup"]) and
                         self.leafset(cc["leafset"]) == Y, "coordinate of another stabilizer")
            self._coordinate(cc)
            got[self.vertex(cc["vertex"])] = True
        self.require(set(got) == set(Y.vertices), "not every coordinate is certified")

    def _finite_section(self, c: dict) -> None:
        H = self.subgroup(c["subgroup"])
        y = self.vertex(c["vertex"])
        fin = c["finite"]
        if y.level == 0:
            self.require(list(fin["generators"]) == list(c["subgroup"]),
                         "finite certificate is about another subgroup")
        else:
            Y = self.leafset(c["leafset"])
            self.require(y in Y, "vertex outside the leaf set")
            C, complete = coordinate_sample(H, Y, y, self.budget.closure_limit, self.budget)
            self.require(complete, "coordinate generators could not be recomputed")
            self.require(C.gen_strings() == list(fin["generators"]),
                         "finite certificate is about another subgroup")
        self._finite(fin)

    def _kernel(self, c: dict) -> None:
        grp = self.grp
        R = self.subgroup(c["subgroup"])
        h = self.word(c["element"])
        self.require(self.same(R.evaluate(R.parse_expr(c["expression"])), h),
                     "kernel element is not the claimed expression")
        for u in c["support"]:
            v = self.vertex(u)
            img, sec = grp.act_word(h, v.letters)
            self.require(img == v.letters and grp.is_trivial(sec, self.budget),
                         f"section at {u} is not trivial")
        moved = self.vertex(c["moves"])
        self.require(grp.act_word(h, moved.letters)[0] != moved.letters,
                     "kernel element fixes the claimed vertex")

    def _chain(self, c: dict) -> None:
        from .rank import verify_depth_chain
        chain = DepthChain.from_dict(self.grp, c)
        verify_depth_chain(chain, self.budget)

    def _finite_index_step(self, c: dict) -> None:
        self._containment(c["containment"])

    def _neighborhood(self, c: dict) -> None:
        grp = self.grp
        H = self.subgroup(c["subgroup"])
        for w in c.get("witnesses", []):
            self._membership({"subgroup": c["subgroup"], **w})
        for e in c.get("excluded", []):
            self._excluded({"subgroup": c["subgroup"], **e})
        if "excluded" in c and isinstance(c["excluded"], dict):
            self._excluded({"subgroup": c["subgroup"], **c["excluded"]})
        if "witness" in c:
            self._membership({"subgroup": c["subgroup"], **c["witness"]})
        if c.get("reason") == "contradictory":
            self.require(self.same(self.word(c["avoid"]), self.word(c["contain"])),
                         "avoided and required elements differ")


def verify_report(report: dict, budget: Budget = DEFAULT_BUDGET) -> VerifyResult:
    """Replay every certificate found in a report."""
    grp = report_group(report)
    ver = Verifier(grp, budget)
    out = VerifyResult()

    def run(path: str, cert: dict, status: str) -> None:
        kind = cert.get("kind", "?") if isinstance(cert, dict) else "?"
        try:
            ver.check(cert, status)
            out.checks.append(Check(path, kind, True))
        except (MalformedCertificate, BudgetExceeded, ValueError, KeyError, TypeError) as exc:
            out.checks.append(Check(path, kind, False, f"{type(exc).__name__}: {exc}"))

    def walk(node: Any, path: str) -> None:
        if isinstance(node, dict):
            status = node.get("status")
            cert = node.get("certificate")
            if isinstance(cert, dict) and status in ("proved", "refuted"):
                run(path + "/certificate", cert, status)
            elif isinstance(cert, dict) and status is None and "kind" in cert:
                run(path + "/certificate", cert, "proved")
            if node.get("kind") == "kernel_element":
                run(path, node, "proved")
            for k in sorted(node):
                if k != "certificate":
                    walk(node[k], f"{path}/{k}")
        elif isinstance(node, list):
            for i, x in enumerate(node):
                walk(x, f"{path}/{i}")

    walk(report.get("result"), "")
    return out


def verify_text(text: str, budget: Budget = DEFAULT_BUDGET) -> VerifyResult:
    return verify_report(load(text), budget)
