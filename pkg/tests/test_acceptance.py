"""Acceptance criteria 1-11.

Each ``run_criterion_N`` is memoized and returns (passed, details, certs);
``certs`` maps labels to verdict dicts that criterion 11 replays.  The
conftest prints one PASS/FAIL line per criterion after the run.
"""

import functools
import itertools
import random
import time

from branchlab import perm as P
from branchlab.certify import dump, load, make_report, verify_report
from branchlab.config import DEFAULT_BUDGET
from branchlab.fgsub import FgSubgroup
from branchlab.leafsys import (build_J, diagonal_subgroup, invariant_independent_family,
                               is_invariant, rigid_copy)
from branchlab.quotient import index_trace, level_stabilizer_generators, quotient_order
from branchlab.rank import (build_depth_chain, classify, finite_section_at, gn_classify,
                            step_index_trace, verify_depth_chain)
from branchlab.ssgroup import (GRIGORCHUK_TEXT, GUPTA_SIDKI_TEXT, act, builtin, equals,
                               inverse_word, parse_group, section)
from branchlab.subgroup import (_coordinate_finiteness, branching_subgroup, certify_some_level,
                                infra_direct_verdict, pointwise_stabilizer, section_subgroup,
                                subgroup_from_words, trivial_subgroup)
from branchlab.tree import LeafSet, Vertex, is_independent, level_vertices, shadow

import oracles

RESULTS = {}


def fresh(name):
    """A new copy of a built-in, so that timings start from empty caches."""
    text = {"grigorchuk": GRIGORCHUK_TEXT, "gupta_sidki3": GUPTA_SIDKI_TEXT}[name]
    grp = parse_group(text, name)
    grp.embedding = builtin(name).embedding
    return grp


def record(n):
    def wrap(fn):
        @functools.cache
        def inner():
            out = fn()
            RESULTS[n] = out
            return out
        return inner
    return wrap


RELATIONS = {
    "grigorchuk": [("aa", "e"), ("bb", "e"), ("cc", "e"), ("dd", "e"),
                   ("bc", "d"), ("cd", "b"), ("db", "c")],
    "gupta_sidki3": [("aaa", "e"), ("ttt", "e")],
}
ORACLE_LEVEL = {"grigorchuk": 10, "gupta_sidki3": 6}


@record(1)
def run_criterion_1():
    t0 = time.perf_counter()
    certs, bad = {}, []
    for name, rels in RELATIONS.items():
        grp = fresh(name)
        k = grp.alphabet_size
        verts = list(itertools.product(range(k), repeat=ORACLE_LEVEL[name]))
        for lhs, rhs in rels:
            u, w = grp.parse_word(lhs), grp.parse_word(rhs)
            # free reduction only: the rules being checked are not used
            v = grp.identity_verdict(u + inverse_word(w), trusted=False)
            certs[f"{name}:{lhs}={rhs}"] = v.as_dict()
            if not v.is_proved:
                bad.append(f"{lhs}={rhs} {v.status}")
            for x in verts:
                if oracles.act(name, lhs, x) != oracles.act(name, rhs, x):
                    bad.append(f"{lhs}={rhs} oracle differs at {x}")
                    break
                if grp.act_word(u, x)[0] != oracles.act(name, lhs, x):
                    bad.append(f"{lhs} library action differs at {x}")
                    break
    dt = time.perf_counter() - t0
    return (not bad and dt < 5.0,
            f"{len(certs)} relations proved, oracle on X^10/X^6, {dt:.2f}s" + (f" {bad}" if bad else ""),
            certs)


@record(2)
def run_criterion_2():
    t0 = time.perf_counter()
    expected = {("grigorchuk", 1): 2, ("grigorchuk", 2): 8, ("grigorchuk", 3): 128,
                ("gupta_sidki3", 1): 3}
    gens = {"grigorchuk": "abcd", "gupta_sidki3": "at"}
    oracle = {key: oracles.word_order_on_level(key[0], gens[key[0]], key[1]) for key in expected}
    lib = {key: quotient_order(fresh(key[0]), key[1]) for key in expected}
    dt = time.perf_counter() - t0
    ok = oracle == expected and lib == expected and dt < 10.0
    return ok, f"oracle {list(oracle.values())}, stabilizer chain {list(lib.values())}, {dt:.2f}s", {}


@record(3)
def run_criterion_3():
    rng = random.Random(20240601)
    certs, checked, failures = {}, 0, []
    for name in ("grigorchuk", "gupta_sidki3"):
        grp = builtin(name)
        syms = grp.symbols()
        for i in range(200):
            g = grp.element(tuple(rng.choice(syms) for _ in range(rng.randint(0, 12))))
            h = grp.element(tuple(rng.choice(syms) for _ in range(rng.randint(0, 12))))
            for n in range(4):
                for u in level_vertices(grp.alphabet_size, n):
                    lhs = section(g * h, u)
                    rhs = section(g, act(h, u)) * section(h, u)
                    v = equals(lhs, rhs)
                    checked += 1
                    if not v.is_proved:
                        failures.append((name, str(g), str(h), str(u)))
                    else:
                        certs[f"{name}:{i}:{u}"] = v.as_dict()
    return not failures, f"{checked} section identities, {len(failures)} failures", certs


@record(4)
def run_criterion_4():
    failures, checked = [], 0
    for name in ("grigorchuk", "gupta_sidki3"):
        grp = builtin(name)
        k = grp.alphabet_size
        for n in (1, 2):
            S = level_stabilizer_generators(grp, n)
            for x in level_vertices(k, n):
                secs = [grp.section_word(w, x.letters) for w in S.generators]
                for m in range(1, 5):
                    img = P.PermGroup([grp.level_perm(s, m) for s in secs], k ** m)
                    checked += 1
                    if img.order() != quotient_order(grp, m):
                        failures.append((name, n, str(x), m))
    return not failures, f"{checked} section images equal the full quotient", {}


@record(5)
def run_criterion_5():
    G = builtin("grigorchuk")
    subs = {"<b>": subgroup_from_words(G, ["b"]), "<a,b>": subgroup_from_words(G, ["a", "b"]),
            "st(1)": level_stabilizer_generators(G, 1),
            "diag": diagonal_subgroup(G, LeafSet.full_level(2, 1))}
    traces = {k: index_trace(H, [1, 2, 3, 4]) for k, H in subs.items()}
    ok = all(all(a <= b for a, b in zip(t, t[1:])) for t in traces.values())
    cert = certify_some_level(subs["st(1)"])
    ok = ok and cert.is_proved
    if cert.is_proved:
        start = max(cert.certificate["level"], 1)
        ok = ok and all(x == cert.evidence["index"] for x in traces["st(1)"][start - 1:])
    return ok, f"traces {traces}; st(1) contains st_G({cert.certificate['level']})", \
        {"st(1) containment": cert.as_dict()}


@record(6)
def run_criterion_6():
    G = builtin("grigorchuk")
    H = subgroup_from_words(G, ["b"])
    certs, T = {}, []
    for y in level_vertices(2, 1):
        c = finite_section_at(H, y)
        if c is not None:
            T.append(y)
            certs[f"finite section at {y}"] = {"status": "proved", "certificate": c}
    T = LeafSet(T, 2)
    bad = [n for n in range(2, 6) if not is_invariant(H, shadow(T, n))]
    return len(T) > 0 and not bad, f"finite-section vertices {T}; shadows 2..5 invariant", certs


@record(7)
def run_criterion_7():
    G = builtin("grigorchuk")
    X1 = LeafSet.full_level(2, 1)
    out, ok = {}, True
    for label, H in (("<b>", subgroup_from_words(G, ["b"])), ("1", trivial_subgroup(G))):
        fam = invariant_independent_family(H, X1, 3, 2)
        out[label] = [str(Y) for Y in fam]
        ok = ok and len(fam) == 3 and is_independent(fam)
        ok = ok and all(is_invariant(H, Y) for Y in fam)
        ok = ok and all(v.level >= 2 for Y in fam for v in Y)
    return ok, f"families {out}", {}


@record(8)
def run_criterion_8():
    G = builtin("grigorchuk")
    H = subgroup_from_words(G, ["b"])
    fam = invariant_independent_family(H, LeafSet.parse("0"), 2, 2)
    v = Vertex.parse("000")
    info, certs = {}, {}
    for alpha in (0, 1):
        J = build_J(G, fam, [alpha])
        HJ = FgSubgroup.make(G, H.generators + J.generators, f"HJ{alpha}")
        C = section_subgroup(pointwise_stabilizer(HJ, LeafSet([v])), v)
        orders = [C.level_group(m).order() for m in range(1, 5)]
        fin = _coordinate_finiteness(HJ, LeafSet([v]), v, DEFAULT_BUDGET)
        info[alpha] = (orders, fin is not None)
        if fin is not None:
            certs[f"HJ{alpha} finite at {v}"] = {"status": "proved", "certificate": fin}
    grows = all(a < b for a, b in zip(info[0][0], info[0][0][1:]))
    ok = grows and not info[0][1] and info[1][1]
    return ok, f"family {[str(Y) for Y in fam]}; section at {v}: {info}", certs


@record(9)
def run_criterion_9():
    G = builtin("grigorchuk")
    X1 = LeafSet.full_level(2, 1)
    D = diagonal_subgroup(G, X1)
    R = rigid_copy(G, X1)
    infra = infra_direct_verdict(D, X1)
    chain = verify_depth_chain(build_depth_chain(G, [branching_subgroup(G), R, D]))
    last = chain.evidence["steps"][-1]["evidence"]["trace"]
    deep = step_index_trace(R, D, DEFAULT_BUDGET.replace(evidence_level_binary=7))
    tail = deep["index"][2:]
    ok = (infra.is_proved and chain.is_proved and last["strictly_growing"]
          and all(a < b for a, b in zip(tail, tail[1:])))
    return ok, f"infra-direct {infra.status}, chain {chain.status}, final trace {deep['index']}", \
        {"diagonal infra-direct": infra.as_dict(), "chain": chain.as_dict()}


@record(10)
def run_criterion_10():
    t0 = time.perf_counter()
    G = fresh("grigorchuk")
    X1 = LeafSet.full_level(2, 1)
    certs, notes, ok = {}, [], True
    for n in range(4):
        r = classify(level_stabilizer_generators(G, n))
        ok = ok and r.kind == "FiniteIndex" and r.rank == 0
        certs[f"st({n})"] = r.as_dict()
    for w in ("b", "d"):
        r = classify(subgroup_from_words(G, [w]))
        ok = ok and r.kind == "PerfectKernel" and r.case == "finite-section"
        certs[f"<{w}>"] = r.as_dict()
    r = classify(diagonal_subgroup(G, X1))
    lo, hi = r.depth_interval or (None, None)
    ok = ok and r.kind == "FiniteRank" and lo <= 1 <= hi
    ok = ok and hi == 2 ** r.evidence["lower_system"]["size"]
    certs["diag"] = r.as_dict()
    notes.append(f"diag depth in [{lo}, {hi}]")
    for label, H, case in (("G", FgSubgroup.whole(G), "b"),
                           ("st(1)", level_stabilizer_generators(G, 1), "b"),
                           ("<d>", subgroup_from_words(G, ["d"]), "a")):
        g = gn_classify(H)
        ok = ok and g.case == case
        if case == "b":
            ok = ok and g.leafset == X1
        certs[f"gn {label}"] = g.as_dict()
    dt = time.perf_counter() - t0
    return ok and dt < 60.0, "; ".join(notes) + f"; {dt:.1f}s", certs


def _proved_paths(node, path=""):
    if isinstance(node, dict):
        if node.get("status") == "proved" and isinstance(node.get("certificate"), dict):
            yield path + "/certificate"
        for k in sorted(node):
            if k != "certificate":
                yield from _proved_paths(node[k], f"{path}/{k}")
    elif isinstance(node, list):
        for i, x in enumerate(node):
            yield from _proved_paths(x, f"{path}/{i}")


@record(11)
def run_criterion_11():
    runs = [run_criterion_1, run_criterion_2, run_criterion_3, run_criterion_4, run_criterion_5,
            run_criterion_6, run_criterion_7, run_criterion_8, run_criterion_9, run_criterion_10]
    result = {f"criterion_{i + 1}": fn()[2] for i, fn in enumerate(runs)}
    # certificates over the ternary group carry its name as a label prefix
    split = {"grigorchuk": {}, "gupta_sidki3": {}}
    for crit, certs in result.items():
        for label, c in certs.items():
            name = "gupta_sidki3" if label.startswith("gupta_sidki3:") else "grigorchuk"
            split[name].setdefault(crit, {})[label] = c
    reports = [make_report(builtin(name), "acceptance", res) for name, res in split.items()]
    total, failed, proved, covered = 0, 0, 0, 0
    for rep in reports:
        text = dump(rep)
        res = verify_report(load(text))
        again = verify_report(load(text))
        if dump(res.as_dict()) != dump(again.as_dict()) or dump(load(text)) != text:
            return False, "verification output is not byte-deterministic", {}
        ok_paths = {c.path for c in res.checks if c.ok}
        paths = list(_proved_paths(rep["result"]))
        proved += len(paths)
        covered += sum(1 for p in paths if p in ok_paths)
        total += len(res.checks)
        failed += len(res.failures)
    # regenerating certificates gives the same bytes
    RESULTS.pop(1, None)
    run_criterion_1.cache_clear()
    first = dump(make_report(builtin("grigorchuk"), "c1", run_criterion_1()[2]))
    run_criterion_1.cache_clear()
    second = dump(make_report(builtin("grigorchuk"), "c1", run_criterion_1()[2]))
    deterministic = first == second
    ok = failed == 0 and proved > 0 and covered == proved and deterministic
    return ok, (f"{total} certificates replayed, {failed} failed; {covered}/{proved} Proved "
                f"re-validated; deterministic={deterministic}"), {}


def test_criterion_1_relations():
    assert run_criterion_1()[0], run_criterion_1()[1]


def test_criterion_2_quotient_orders():
    assert run_criterion_2()[0], run_criterion_2()[1]


def test_criterion_3_section_calculus():
    assert run_criterion_3()[0], run_criterion_3()[1]


def test_criterion_4_self_replication():
    assert run_criterion_4()[0], run_criterion_4()[1]


def test_criterion_5_monotone_approximation():
    assert run_criterion_5()[0], run_criterion_5()[1]


def test_criterion_6_shadow_invariance():
    assert run_criterion_6()[0], run_criterion_6()[1]


def test_criterion_7_independent_families():
    assert run_criterion_7()[0], run_criterion_7()[1]


def test_criterion_8_witness_distinctness():
    assert run_criterion_8()[0], run_criterion_8()[1]


def test_criterion_9_diagonal_depth():
    assert run_criterion_9()[0], run_criterion_9()[1]


def test_criterion_10_classification():
    assert run_criterion_10()[0], run_criterion_10()[1]


def test_criterion_11_certificate_replay():
    assert run_criterion_11()[0], run_criterion_11()[1]
