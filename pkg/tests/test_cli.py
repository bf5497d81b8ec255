import io
import subprocess
import sys

import pytest
import yaml

from branchlab.cli import make_budget, build_parser, run
from branchlab.ssgroup import GRIGORCHUK_TEXT


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    return code, out.getvalue()


def test_equal_and_eval():
    code, out = call("equal", "bc", "d")
    assert code == 0 and out.startswith("proved")
    code, out = call("equal", "ab", "ba")
    assert code == 0 and out.startswith("refuted")
    code, out = call("eval", "a", "011")
    assert code == 0 and out == "111\n"
    code, out = call("section", "b", "1")
    assert out == "c\n"


def test_quotient_and_shadow():
    code, out = call("quotient", "--level", "3")
    assert code == 0 and "128" in out
    code, out = call("shadow", "0,10", "--level", "2")
    assert out.strip() == "00,01,10"


def test_group_commands(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text(GRIGORCHUK_TEXT)
    code, out = call("group", "load", str(path))
    assert code == 0 and "proved" in out
    code, _ = call("group", "builtin", "gupta_sidki3", "--require-decision")
    assert code == 0


def test_input_errors_exit_3(tmp_path):
    assert call("equal", "bx", "d")[0] == 3
    assert call("shadow", "0,01", "--level", "3")[0] == 3
    assert call("group", "builtin", "nosuch")[0] == 3
    assert call("classify", "b", "--budget", "bogus=1")[0] == 3
    assert call("verify", str(tmp_path / "missing.yaml"))[0] == 3
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 3


def test_require_decision_exit_2():
    # with a tiny ball and no recursion nothing is decided for the diagonal
    code, out = call("classify", "diag:0,1", "--budget", "ball_size=1,witness_depth=0",
                     "--budget", "gn_depth=0", "--require-decision")
    assert code == 2, out
    code, out = call("classify", "st(2)", "--require-decision")
    assert code == 0 and out.startswith("FiniteIndex rank 0")


def test_structured_report_verifies(tmp_path):
    rep = tmp_path / "r.yaml"
    code, _ = call("classify", "b", "--format", "structured", "--out", str(rep))
    assert code == 0
    data = yaml.safe_load(rep.read_text())
    assert data["result"]["kind"] == "PerfectKernel"
    code, out = call("verify", str(rep))
    assert code == 0 and "failed 0" in out


def test_tampered_report_exit_3(tmp_path):
    rep = tmp_path / "r.yaml"
    call("equal", "bc", "d", "--format", "structured", "--out", str(rep))
    text = rep.read_text().replace("rhs: d", "rhs: b")
    rep.write_text(text)
    assert call("verify", str(rep))[0] == 3


def test_structured_output_is_deterministic():
    a = call("gn", "G", "--format", "structured")[1]
    b = call("gn", "G", "--format", "structured", "--seed", "7")[1]
    assert a == b


def test_depth_build_and_verify(tmp_path):
    chain = tmp_path / "chain.yaml"
    code, _ = call("depth", "build", "K", "rigid:0,1", "--out", str(chain))
    assert code == 0
    code, out = call("depth", "verify", str(chain))
    assert code == 0 and "containments: proved" in out


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("BRANCHLAB_BALL_SIZE", "77")
    args = build_parser().parse_args(["classify", "b", "--budget", "witness_depth=3"])
    b = make_budget(args)
    assert b.ball_size == 77 and b.witness_depth == 3
    args = build_parser().parse_args(["classify", "b", "--max-level", "4"])
    assert make_budget(args).max_level(2) == 4


def test_dot_outputs():
    code, out = call("portrait", "b", "--depth", "2", "--dot")
    assert code == 0 and out.startswith("digraph")
    code, out = call("lower-system", "G", "0,1", "--emit", "dot")
    assert code == 0 and out.startswith("digraph")


def test_family_and_buildJ():
    code, out = call("family", "b", "0", "--count", "2", "--min-level", "2")
    assert code == 0 and "000,010" in out
    code, out = call("buildJ", "--family", "00|010", "--support", "0")
    assert code == 0


def test_nbhd():
    assert call("nbhd", "b", "--avoid", "a", "--require-decision")[0] == 0
    code, out = call("nbhd", "b", "--avoid", "b", "--contain", "b")
    assert out.strip() == "refuted"


def test_entry_point():
    proc = subprocess.run([sys.executable, "-m", "branchlab.cli", "equal", "cd", "b"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("proved")
