import json

import pytest

from msckit.cli import main
from msckit.corpus import example
from msckit.io import serialize_msc, serialize_trace
from msckit.core import send, recv


@pytest.fixture
def msc_file(tmp_path):
    def write(name):
        path = tmp_path / f"{name}.msc"
        path.write_text(serialize_msc(example(name)), encoding="utf-8")
        return str(path)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


def test_validate_ok(capsys, msc_file):
    code, out = run(capsys, "validate", msc_file("relay"))
    assert code == 0 and "ok" in out


def test_validate_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.msc"
    bad.write_text("order p !m1\n", encoding="utf-8")
    code, _ = run(capsys, "validate", str(bad))
    assert code == 2


def test_classify_table(capsys, msc_file):
    code, out = run(capsys, "classify", msc_file("two_targets"))
    assert code == 0
    assert "rsc   no" in out
    for model in ("asy", "p2p", "co", "mb", "onen", "nn"):
        assert f"{model:<5} yes" in out


def test_classify_json_roundtrips(capsys, msc_file):
    code, out = run(capsys, "--format", "json", "classify", msc_file("two_targets"))
    assert code == 0
    data = json.loads(out)
    assert data["models"]["nn"] is True and data["models"]["rsc"] is False
    from msckit.classify import ClassReport

    assert ClassReport.from_json(data).verdicts["mb"] is True


def test_deterministic_output(capsys, msc_file):
    path = msc_file("pipeline")
    _, first = run(capsys, "--format", "json", "classify", path)
    _, second = run(capsys, "--format", "json", "classify", path)
    assert first == second


def test_linearize_pipeline(capsys, msc_file):
    code, out = run(capsys, "linearize", "--model", "nn", msc_file("pipeline"))
    assert code == 0
    assert out.strip() == "!m5 !m1 !m2 !m3 ?m5 ?m1 ?m2 !m4 !m6 ?m3 ?m4"


def test_linearize_not_member(capsys, msc_file):
    code, out = run(capsys, "linearize", "--model", "p2p", msc_file("crossing"))
    assert code == 1 and "not in model" in out


def test_check_lin(capsys, msc_file):
    path = msc_file("train")
    code, _ = run(capsys, "check-lin", "--model", "nn", "--lin", "!m1 ?m1 !m2 ?m2 !m3 ?m3", path)
    assert code == 0
    code, out = run(capsys, "check-lin", "--model", "rsc", "--lin", "!m1 !m2 ?m1 ?m2 !m3 ?m3", path)
    assert code == 1 and "violated" in out


def test_bounded(capsys, msc_file):
    path = msc_file("train")
    assert run(capsys, "bounded", "--k", "2", "--model", "p2p", path)[0] == 0
    code, out = run(capsys, "bounded", "--k", "2", "--model", "p2p", "--universal", path)
    assert code == 1 and "no" in out


def test_decompose(capsys, msc_file):
    code, out = run(capsys, "decompose", "--k", "1", msc_file("staggered"))
    assert code == 0 and out.count("factor") == 3
    code, out = run(capsys, "decompose", msc_file("producer"))
    assert code == 1 and "impossible" in out


def test_stw(capsys, msc_file):
    code, out = run(capsys, "stw", "--max", "3", msc_file("overtake"))
    assert code == 0 and "special treewidth: 2" in out
    code, out = run(capsys, "stw", "--max", "3", "--trace", msc_file("overtake"))
    assert code == 0 and "winning strategy" in out


def test_mso(capsys, msc_file):
    path = msc_file("blocked")
    code, out = run(capsys, "mso", "--formula", "~E x. (send(x) & ~matched(x))", path)
    assert code == 1 and "not satisfied" in out
    assert run(capsys, "mso", "--builtin", "mb", msc_file("two_targets"))[0] == 0
    assert run(capsys, "mso", "--formula", "E x. (", path)[0] == 2


def test_exec(tmp_path, capsys):
    trace = tmp_path / "t.trace"
    trace.write_text(
        serialize_trace(
            [send("p", "q", "m1"), send("q", "r", "m2"), recv("q", "r", "m2"), recv("p", "q", "m1")]
        ),
        encoding="utf-8",
    )
    code, out = run(capsys, "exec", str(trace))
    assert code == 0 and out.split() == ["mb", "onen", "p2p"]
    assert run(capsys, "exec", "--network", "mb", str(trace))[0] == 0
    code, out = run(capsys, "exec", "--network", "nn", str(trace))
    assert code == 1 and "rejected at step 2" in out


def test_cfsm_cli(tmp_path, capsys):
    sysfile = tmp_path / "sys.cfsm"
    sysfile.write_text(
        "machine p: state a init; trans a -> b on ! q m1\n"
        "machine q: state z init; trans z -> y on ? p m1\n",
        encoding="utf-8",
    )
    code, out = run(capsys, "cfsm", "explore", "--system", str(sysfile), "--max-events", "4")
    assert code == 0 and "total: 3 behaviors" in out
    code, out = run(
        capsys,
        "cfsm",
        "synch",
        "--system",
        str(sysfile),
        "--predicate",
        "weakly-synchronous",
        "--max-events",
        "4",
    )
    assert code == 0 and "no violation" in out


def test_dot(capsys, msc_file):
    code, out = run(capsys, "dot", msc_file("blocked"))
    assert code == 0 and "style=dashed" in out
    code, out = run(capsys, "dot", "--relation", "mb", msc_file("mailbox_cross"))
    assert code == 0 and "digraph mb" in out


def test_usage_error_exit_2(capsys):
    assert main(["linearize"]) == 2
    assert main(["classify", "/nonexistent/file.msc"]) == 2
