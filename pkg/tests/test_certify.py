import copy

import pytest

from branchlab.certify import Verifier, dump, load, make_report, report_group, verify_report, verify_text
from branchlab.fgsub import FgSubgroup
from branchlab.leafsys import build_lower_leaf_system, diagonal_subgroup
from branchlab.rank import build_depth_chain, classify, neighborhood_contains, verify_depth_chain
from branchlab.ssgroup import builtin, equals, parse_group
from branchlab.subgroup import (branching_subgroup, certify_some_level, finiteness_verdict,
                                infra_direct_verdict, subgroup_from_words)
from branchlab.tree import LeafSet
from branchlab.verdict import MalformedCertificate

G = builtin("grigorchuk")
X1 = LeafSet.full_level(2, 1)


def _report():
    result = {
        "equal": equals(G.element("bc"), G.element("d")).as_dict(),
        "differ": equals(G.element("ab"), G.element("ba")).as_dict(),
        "finite": finiteness_verdict(subgroup_from_words(G, ["a", "d"])).as_dict(),
        "containment": certify_some_level(branching_subgroup(G)).as_dict(),
        "infra": infra_direct_verdict(FgSubgroup.whole(G), X1).as_dict(),
        "finite_section": infra_direct_verdict(subgroup_from_words(G, ["b"]), X1).as_dict(),
        "nbhd": neighborhood_contains(subgroup_from_words(G, ["b"]), ["a"], ["b"]).as_dict(),
        "chain": verify_depth_chain(build_depth_chain(G, [branching_subgroup(G)])).as_dict(),
    }
    return make_report(G, "test", result)


def test_report_verifies():
    res = verify_report(_report())
    assert res.ok
    kinds = {c.kind for c in res.checks}
    assert {"equal", "differ", "finite", "level_containment", "infra_direct",
            "finite_section", "neighborhood", "chain"} <= kinds


def test_dump_is_deterministic_and_roundtrips():
    a, b = dump(_report()), dump(_report())
    assert a == b
    assert load(a) == _report()
    assert verify_text(a).ok


def test_sha_mismatch():
    rep = _report()
    rep["group"]["sha256"] = "0" * 64
    with pytest.raises(MalformedCertificate):
        report_group(rep)
    rep = _report()
    rep["group"]["definition"] = rep["group"]["definition"].replace("rule bc -> d\n", "")
    with pytest.raises(MalformedCertificate):
        verify_report(rep)


def test_not_a_report():
    with pytest.raises(MalformedCertificate):
        load("just: a mapping\n")


def _tampered(path, value):
    rep = _report()
    node = rep["result"]
    for k in path[:-1]:
        node = node[k]
    node[path[-1]] = value
    return verify_report(rep)


def test_tampered_equality():
    assert not _tampered(["equal", "certificate", "rhs"], "b").ok
    assert not _tampered(["differ", "certificate", "vertex"], "-").ok


def test_tampered_finite_closure():
    rep = _report()
    cert = rep["result"]["finite"]["certificate"]
    cert["closure"][0][2] = (cert["closure"][0][2] + 1) % len(cert["elements"])
    assert not verify_report(rep).ok


def test_tampered_witness():
    rep = _report()
    cert = rep["result"]["containment"]["certificate"]
    cert["witnesses"][0] += " h0"
    res = verify_report(rep)
    assert not res.ok
    assert res.failures[0].kind == "level_containment"


def test_tampered_targets():
    rep = _report()
    cert = rep["result"]["containment"]["certificate"]
    cert["targets"] = cert["targets"][1:]
    cert["witnesses"] = cert["witnesses"][1:]
    assert not verify_report(rep).ok


def test_status_must_match_kind():
    rep = _report()
    rep["result"]["finite_section"]["status"] = "proved"
    rep["result"]["equal"]["status"] = "refuted"
    res = verify_report(rep)
    assert len(res.failures) == 1      # finite_section is valid either way


def test_custom_group_report():
    grp = parse_group(G.to_text(), "mygrig")
    rep = make_report(grp, "x", {"v": equals(grp.element("cd"), grp.element("b")).as_dict()})
    rep2 = load(dump(rep))
    assert verify_report(rep2).ok
    assert report_group(rep2).digest() == G.digest()


def test_stage_certificates_are_checked():
    s = build_lower_leaf_system(FgSubgroup.whole(G), X1)
    rep = make_report(G, "lower", s.as_dict())
    res = verify_report(rep)
    assert res.ok and len(res.checks) == 2
    s.stages[0].certificate["lifts"][0] += " h0"
    assert not verify_report(make_report(G, "lower", s.as_dict())).ok


def test_classification_report():
    r = classify(diagonal_subgroup(G, X1))
    res = verify_report(make_report(G, "classify", r.as_dict()))
    assert res.ok and len(res.checks) >= 3


def test_unknown_kind_fails():
    with pytest.raises(MalformedCertificate):
        Verifier(G).check({"kind": "mystery"})
