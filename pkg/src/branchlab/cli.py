"""Command-line front end.

Exit codes: 0 on success, 2 when ``--require-decision`` is given and the
answer is Unknown, 3 on malformed input or a certificate that fails to replay.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import random
import sys
from typing import Optional

import yaml

from . import __version__
from .certify import dump, load, make_report, report_group, verify_report
from .config import Budget, BudgetExceeded
from .fgsub import FgSubgroup
from .leafsys import (build_J, build_lower_leaf_system, diagonal_subgroup, invariant_independent_family,
                      is_invariant, key_lemma_support, rigid_copy, system_to_dot)
from .quotient import index_trace, level_quotient, level_stabilizer_generators
from .rank import (DepthChain, build_depth_chain, classify, depth_upper_bound, gn_classify,
                   neighborhood_contains, verify_depth_chain)
from .ssgroup import Element, GroupDef, builtin, equals, parse_group, portrait
from .subgroup import (approximate, branching_subgroup, coordinate_sample, finiteness_verdict,
                       infra_direct_verdict, orbit_on_level, pointwise_stabilizer,
                       trivial_subgroup)
from .tree import LeafSet, Vertex, is_independent, shadow
from .verdict import MalformedCertificate, Verdict

EXIT_OK, EXIT_UNKNOWN, EXIT_INPUT = 0, 2, 3


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


@dataclasses.dataclass
class Session:
    group: GroupDef
    budget: Budget
    subgroups: dict = dataclasses.field(default_factory=dict)

    def subgroup(self, spec: str) -> FgSubgroup:
        if spec not in self.subgroups:
            self.subgroups[spec] = parse_subgroup(self.group, spec, self.budget)
        return self.subgroups[spec]

    def leafset(self, text: str) -> LeafSet:
        return LeafSet.parse(text, self.group.alphabet_size)

    def vertex(self, text: str) -> Vertex:
        return Vertex.parse(text, self.group.alphabet_size)


def load_group(spec: str) -> GroupDef:
    if os.path.exists(spec):
        with open(spec) as fh:
            return parse_group(fh.read(), os.path.splitext(os.path.basename(spec))[0])
    return builtin(spec)


def parse_subgroup(grp: GroupDef, spec: str, budget: Budget) -> FgSubgroup:
    """``G``, ``K``, ``trivial``, ``st(n)``, ``diag:<leafset>``, ``rigid:<leafset>``, or words ``w1;w2``."""
    spec = spec.strip()
    k = grp.alphabet_size
    if spec == "G":
        return FgSubgroup.whole(grp)
    if spec == "K":
        return branching_subgroup(grp)
    if spec in ("trivial", "1"):
        return trivial_subgroup(grp)
    if spec.startswith("st(") and spec.endswith(")"):
        return level_stabilizer_generators(grp, int(spec[3:-1]), budget)
    if spec.startswith("diag:"):
        return diagonal_subgroup(grp, LeafSet.parse(spec[5:], k), budget)
    if spec.startswith("rigid:"):
        return rigid_copy(grp, LeafSet.parse(spec[6:], k), budget)
    words = [w for w in spec.replace(",", ";").split(";") if w.strip()]
    if not words:
        raise ValueError(f"empty subgroup specification {spec!r}")
    return FgSubgroup.make(grp, [grp.parse_word(w) for w in words], f"<{spec}>", budget)


def _words(grp: GroupDef, text: Optional[str]) -> list:
    if not text:
        return []
    return [grp.parse_word(w) for w in text.replace(",", ";").split(";") if w.strip()]


# -- commands: each returns (result, summary lines, decided) -----------------

def cmd_group(s: Session, a):
    if a.action == "load":
        s.group = load_group(a.source)
    else:
        s.group = builtin(a.source)
    grp = s.group
    rels = grp.validate_rules(s.budget)
    result = {"definition": grp.to_text(), "sha256": grp.digest(),
              "relations": [{"rule": r, **v.as_dict()} for r, v in rels]}
    lines = [f"group {grp.name or 'custom'} alphabet {grp.alphabet_size} sha256 {grp.digest()[:16]}"]
    lines += [f"  {r}: {v.status}" for r, v in rels]
    return result, lines, all(v.is_proved for _, v in rels)


def cmd_eval(s: Session, a):
    g = s.group.element(a.word)
    img, _ = s.group.act_word(g.word, s.vertex(a.vertex).letters)
    out = str(Vertex(img, s.group.alphabet_size))
    return {"word": str(g), "vertex": a.vertex, "image": out}, [out], True


def cmd_section(s: Session, a):
    g = s.group.element(a.word)
    sec = s.group.section_word(g.word, s.vertex(a.vertex).letters)
    out = s.group.format_word(sec)
    return {"word": str(g), "vertex": a.vertex, "section": out}, [out], True


def cmd_equal(s: Session, a):
    v = equals(s.group.element(a.lhs), s.group.element(a.rhs), s.budget)
    return {"verdict": v.as_dict()}, [str(v.status)], not v.is_unknown


def cmd_portrait(s: Session, a):
    p = portrait(s.group.element(a.word), a.depth, s.budget)
    if a.dot:
        return None, [p.to_dot(a.word).rstrip("\n")], True
    labels = {str(v): _fmt_perm(perm) for v, perm in sorted(p.labels.items())}
    frontier = {str(v): s.group.format_word(w) for v, w in sorted(p.frontier.items())}
    lines = [f"{v}: {lbl}" for v, lbl in labels.items()]
    lines += [f"{v} -> {w}" for v, w in frontier.items()]
    return {"depth": a.depth, "labels": labels, "frontier": frontier}, lines, True


def _fmt_perm(perm) -> str:
    from .ssgroup import format_perm
    return format_perm(perm)


def cmd_quotient(s: Session, a):
    if a.group_name:
        s.group = load_group(a.group_name)
    q = level_quotient(s.group, a.level, s.budget)
    rep = q.report()
    return rep, [f"level {a.level} order {rep['order']}"] + \
        [f"  {n}: {c}" for n, c in rep["generators"].items()], True


def cmd_stab(s: Session, a):
    H = s.subgroup(a.subgroup)
    Y = s.leafset(a.leafset)
    S = pointwise_stabilizer(H, Y, s.budget)
    res = {"subgroup": H.gen_strings(), "leafset": str(Y), "index": S.index,
           "generators": S.gen_strings(),
           "lifts": [H.format_expr(e) for e in S.parent_exprs]}
    return res, [f"index {S.index}, {len(S.generators)} Schreier generators"] + \
        [f"  {g}" for g in S.gen_strings()], True


def cmd_sections(s: Session, a):
    H = s.subgroup(a.subgroup)
    y = s.vertex(a.vertex)
    C, complete = coordinate_sample(H, LeafSet([y], y.alphabet_size), y,
                                    s.budget.closure_limit, s.budget)
    levels = list(range(1, s.budget.evidence_level(s.group.alphabet_size) + 1))
    fin = finiteness_verdict(C, s.budget) if complete else Verdict.unknown(
        {"orbit_limit": s.budget.orbit_limit})
    res = {"vertex": str(y), "generators": C.gen_strings(), "complete": complete,
           "index_trace": index_trace(C, levels, s.budget), "finite": fin.as_dict()}
    return res, [f"psi_{y}: {len(C.generators)} generators, complete={complete}",
                 f"index trace {res['index_trace']}", f"finite: {fin.status}"], True


def cmd_approx(s: Session, a):
    H = s.subgroup(a.subgroup)
    Q = approximate(H, a.level, s.budget)
    res = {"level": a.level, "order": Q.order(), "index": Q.index()}
    return res, [f"level {a.level}: order {Q.order()}, index {Q.index()}"], True


def cmd_orbit(s: Session, a):
    H = s.subgroup(a.subgroup)
    orbs = [[str(v) for v in o] for o in orbit_on_level(H, a.level, s.budget)]
    return {"level": a.level, "orbits": orbs}, [",".join(o) for o in orbs], True


def cmd_shadow(s: Session, a):
    out = str(shadow(s.leafset(a.leafset), a.level))
    return {"leafset": a.leafset, "level": a.level, "shadow": out}, [out], True


def cmd_infra(s: Session, a):
    H = s.subgroup(a.subgroup)
    v = infra_direct_verdict(H, s.leafset(a.leafset), s.budget)
    return {"verdict": v.as_dict()}, [f"infra-direct: {v.status}"], not v.is_unknown


def cmd_lower_system(s: Session, a):
    H = s.subgroup(a.subgroup)
    S = build_lower_leaf_system(H, s.leafset(a.leafset), s.budget)
    if a.emit == "dot":
        return None, [system_to_dot(S).rstrip("\n")], S.complete
    res = S.as_dict()
    lines = [f"complete: {S.complete}"]
    lines += [f"  stage {i + 1}: y={st.vertex} Z=X^{st.level} |Y|={len(st.leafset)}"
              for i, st in enumerate(S.stages)]
    if S.complete:
        res["depth_upper_bound"] = depth_upper_bound(H, S)
        lines.append(f"depth upper bound 2^{len(S.final)}")
        if a.key_lemma:
            W, v = key_lemma_support(H, S, s.budget)
            res["key_lemma"] = {"W": str(W), "verdict": v.as_dict()}
            lines.append(f"W = {W}")
    return res, lines, S.complete


def cmd_family(s: Session, a):
    H = s.subgroup(a.subgroup)
    fam = invariant_independent_family(H, s.leafset(a.leafset), a.count, a.min_level, s.budget)
    res = {"family": [str(Y) for Y in fam], "independent": is_independent(fam),
           "invariant": [is_invariant(H, Y) for Y in fam]}
    return res, [str(Y) for Y in fam], True


def cmd_buildJ(s: Session, a):
    fam = [s.leafset(t) for t in a.family.split("|")]
    support = [int(x) for x in a.support.split(",") if x.strip()] if a.support else []
    J = build_J(s.group, fam, support, s.budget)
    return {"family": [str(Y) for Y in fam], "support": support,
            "generators": J.gen_strings()}, [f"{len(J.generators)} generators"] + \
        [f"  {g}" for g in J.gen_strings()], True


def cmd_diagonal(s: Session, a):
    Y = s.leafset(a.leafset)
    D = diagonal_subgroup(s.group, Y, s.budget)
    K = branching_subgroup(s.group)
    checks = []
    for f, k in zip(D.generators, K.generators):
        for y in Y.sorted():
            v = equals(Element(s.group, s.group.section_word(f, y.letters)),
                       Element(s.group, k), s.budget)
            checks.append({"vertex": str(y), "k": s.group.format_word(k), **v.as_dict()})
    ok = all(c["status"] == "proved" for c in checks)
    return {"generators": D.gen_strings(), "section_checks": checks}, \
        [f"  {g}" for g in D.gen_strings()] + [f"sections equal K generators: {ok}"], ok


def cmd_depth(s: Session, a):
    if a.action == "build":
        chain = build_depth_chain(s.group, [s.subgroup(x) for x in a.items], s.budget)
        data = {"group": s.group.name or "custom", **chain.as_dict()}
        text = yaml.safe_dump(data, sort_keys=True)
        if a.out:
            with open(a.out, "w") as fh:
                fh.write(text)
        return data, [text.rstrip("\n")], True
    with open(a.items[0]) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict) or "subgroups" not in data:
        raise ValueError("chain file needs a 'subgroups' list")
    if data.get("group"):
        s.group = load_group(data["group"])
    chain = DepthChain.from_dict(s.group, data)
    v = verify_depth_chain(chain, s.budget)
    return {"verdict": v.as_dict()}, [f"containments: {v.status}",
                                      f"growing steps: {v.evidence['growing_steps']}"], True


def cmd_classify(s: Session, a):
    if a.not_fg:
        r = classify(None, s.budget, finitely_generated=False, group=s.group)
    else:
        r = classify(s.subgroup(a.subgroup), s.budget)
    line = r.kind
    if r.rank is not None:
        line += f" rank {r.rank}"
    if r.depth_interval:
        line += f" depth in [{r.depth_interval[0]}, {r.depth_interval[1]}]"
    if r.case:
        line += f" ({r.case}" + (f" at {r.vertex})" if r.vertex is not None else ")")
    return r.as_dict(), [line], r.decided


def cmd_gn(s: Session, a):
    g = gn_classify(s.subgroup(a.subgroup), s.budget)
    line = f"case {g.case}"
    if g.vertex is not None:
        line += f" at {g.vertex}"
    if g.leafset is not None:
        line += f" Y={g.leafset}"
    return g.as_dict(), [line], g.case != "unknown"


def cmd_nbhd(s: Session, a):
    H = s.subgroup(a.subgroup)
    v = neighborhood_contains(H, _words(s.group, a.avoid), _words(s.group, a.contain), s.budget)
    return {"verdict": v.as_dict()}, [str(v.status)], not v.is_unknown


def cmd_verify(s: Session, a):
    with open(a.report) as fh:
        report = load(fh.read())
    res = verify_report(report, s.budget)
    lines = [f"{c.path or '/'} {c.kind}: {'ok' if c.ok else 'FAIL ' + c.message}" for c in res.checks]
    lines.append(f"checked {len(res.checks)}, failed {len(res.failures)}")
    if not res.ok:
        raise MalformedCertificate("\n".join(lines))
    s.group = report_group(report)
    return res.as_dict(), lines, True


# -- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", default=argparse.SUPPRESS,
                        help="built-in name or definition file (default grigorchuk)")
    common.add_argument("--max-level", type=int, default=argparse.SUPPRESS)
    common.add_argument("--budget", action="append", default=argparse.SUPPRESS,
                        metavar="FIELD=N", help="override a budget field; repeatable")
    common.add_argument("--format", choices=("text", "structured"), default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed for randomized sampling in tests; results never depend on it")
    common.add_argument("--require-decision", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="write output to a file")

    p = Parser(prog="branchlab", parents=[common],
               description="Computations with self-similar branch groups and their subgroups.")
    p.add_argument("--version", action="version", version=f"branchlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    def add(name, fn, help_):
        q = sub.add_parser(name, parents=[common], help=help_)
        q.set_defaults(fn=fn)
        return q

    q = add("group", cmd_group, "load or show a group and check its relations")
    q.add_argument("action", choices=("load", "builtin"))
    q.add_argument("source")
    q = add("eval", cmd_eval, "image of a vertex")
    q.add_argument("word"); q.add_argument("vertex")
    q = add("section", cmd_section, "section of a word at a vertex")
    q.add_argument("word"); q.add_argument("vertex")
    q = add("equal", cmd_equal, "decide equality of two words")
    q.add_argument("lhs"); q.add_argument("rhs")
    q = add("portrait", cmd_portrait, "portrait to a given depth")
    q.add_argument("word"); q.add_argument("--depth", type=int, default=3)
    q.add_argument("--dot", action="store_true")
    q = add("quotient", cmd_quotient, "level quotient report")
    q.add_argument("group_name", nargs="?"); q.add_argument("--level", type=int, required=True)
    q = add("stab", cmd_stab, "pointwise stabilizer of a leaf set")
    q.add_argument("subgroup"); q.add_argument("leafset")
    q = add("sections", cmd_sections, "section subgroup at a vertex")
    q.add_argument("subgroup"); q.add_argument("vertex")
    q = add("approx", cmd_approx, "image in a level quotient")
    q.add_argument("subgroup"); q.add_argument("--level", type=int, required=True)
    q = add("orbit", cmd_orbit, "orbits on a level")
    q.add_argument("subgroup"); q.add_argument("--level", type=int, required=True)
    q = add("shadow", cmd_shadow, "shadow of a leaf set on a level")
    q.add_argument("leafset"); q.add_argument("--level", type=int, required=True)
    q = add("infra", cmd_infra, "infra-direct verdict for a leaf stabilizer")
    q.add_argument("subgroup"); q.add_argument("leafset")
    q = add("lower-system", cmd_lower_system, "lower leaf system")
    q.add_argument("subgroup"); q.add_argument("leafset")
    q.add_argument("--emit", choices=("report", "dot"), default="report")
    q.add_argument("--key-lemma", action="store_true")
    q = add("family", cmd_family, "invariant independent family")
    q.add_argument("subgroup"); q.add_argument("leafset")
    q.add_argument("--count", type=int, default=2); q.add_argument("--min-level", type=int, default=0)
    q = add("buildJ", cmd_buildJ, "rigid copies of K over family members")
    q.add_argument("--family", required=True, help="leaf sets separated by '|'")
    q.add_argument("--support", default="")
    q = add("diagonal", cmd_diagonal, "diagonal copy of K over a spanning leaf set")
    q.add_argument("leafset")
    q = add("depth", cmd_depth, "build or verify a depth chain file")
    q.add_argument("action", choices=("verify", "build")); q.add_argument("items", nargs="+")
    q = add("classify", cmd_classify, "Cantor-Bendixson rank classification")
    q.add_argument("subgroup", nargs="?", default="G")
    q.add_argument("--not-fg", action="store_true", help="the subgroup is not finitely generated")
    q = add("gn", cmd_gn, "Grigorchuk-Nagnibeda alternative")
    q.add_argument("subgroup")
    q = add("nbhd", cmd_nbhd, "membership in a basic Chabauty neighborhood")
    q.add_argument("subgroup"); q.add_argument("--avoid", default="")
    q.add_argument("--contain", default="")
    q = add("verify", cmd_verify, "replay every certificate in a structured report")
    q.add_argument("report")
    return p


def make_budget(args) -> Budget:
    over = {}
    for item in getattr(args, "budget", None) or []:
        for part in item.split(","):
            if not part.strip():
                continue
            key, _, val = part.partition("=")
            key = key.strip().replace("-", "_")
            if key not in {f.name for f in dataclasses.fields(Budget)} or not val.strip():
                raise ValueError(f"bad budget override {part!r}")
            over[key] = int(val)
    ml = getattr(args, "max_level", None)
    if ml is not None:
        over.update(max_level_binary=ml, max_level_other=ml)
    return Budget.from_env(**over)


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is not None:
        random.seed(args.seed)
    fmt = getattr(args, "format", "text")
    try:
        budget = make_budget(args)
        session = Session(load_group(getattr(args, "group", "grigorchuk")), budget)
        result, lines, decided = args.fn(session, args)
    except (ValueError, KeyError, MalformedCertificate, OSError, yaml.YAMLError) as exc:
        print(f"branchlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        result, lines, decided = {"unknown": {"budget": str(exc)}}, [f"unknown: {exc}"], False
        session = locals().get("session")
        if session is None:
            return EXIT_INPUT
    if fmt == "structured" and result is not None:
        text = dump(make_report(session.group, _command_text(args), result))
    else:
        text = "\n".join(lines) + "\n"
    out = getattr(args, "out", None)
    if out and args.command != "depth":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if getattr(args, "require_decision", False) and not decided:
        return EXIT_UNKNOWN
    return EXIT_OK


def _command_text(args) -> str:
    """The subcommand and its mathematical arguments; output flags are left out."""
    skip = {"fn", "format", "out", "seed", "require_decision", "command", "budget", "group",
            "max_level"}
    parts = [args.command]
    for k, v in sorted(vars(args).items()):
        if k not in skip and v not in (None, False, []):
            parts.append(f"{k}={v}")
    return " ".join(parts)


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
