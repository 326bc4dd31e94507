from __future__ import annotations

import json

import pytest

from stallings.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_no_arguments_is_usage_error(capsys):
    code, _, err = run(capsys)
    assert code == 2 and "usage" in err


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["subgroup", "rank", "--gens", "a", "--nope"])
    assert exc.value.code == 2


def test_bad_word_exits_2(capsys):
    code, _, err = run(capsys, "subgroup", "rank", "--gens", "a,bx")
    assert code == 2 and "unknown letter" in err


def test_subgroup_commands(capsys):
    code, out, _ = run(capsys, "subgroup", "rank", "--gens", "a,baB")
    assert code == 0 and json.loads(out) == {"rank": 2}
    _, out, _ = run(capsys, "subgroup", "index", "--gens", "aa,ab,aB")
    assert json.loads(out)["index"] == 2
    _, out, _ = run(capsys, "subgroup", "contains", "--gens", "a,baB", "--word", "baaB")
    assert json.loads(out) == {"contains": True}
    _, out, _ = run(capsys, "subgroup", "intersect", "--gens", "aa", "--other", "aaa")
    assert json.loads(out)["generators"] == ["aaaaaa"]
    _, out, _ = run(capsys, "subgroup", "malnormal", "--gens", "a,b", "--rank", "3", "--radius", "2")
    assert json.loads(out)["malnormal_in_ball"] is True


def test_word_commands(capsys):
    _, out, _ = run(capsys, "word", "cyclic", "--word", "abA")
    assert json.loads(out) == {"conjugator": "a", "core": "b"}
    _, out, _ = run(capsys, "word", "enumerate", "--length", "1")
    assert json.loads(out)["words"] == ["a", "A", "b", "B"]


def test_phi_output_schema(capsys):
    code, out, _ = run(capsys, "phi", "--subgroup", "a,baB", "--max-size", "6", "--radius", "3")
    data = json.loads(out)
    assert code == 0
    assert data["upper"]["num"] == "1" and data["upper"]["den"] == "2"
    assert data["floor"]["budget"] == {"max_size": 6, "radius": 3}


def test_schreier_ball_dot(capsys):
    _, out, _ = run(capsys, "schreier", "ball", "--subgroup", "a,baB", "--radius", "1",
                    "--format", "dot")
    assert out.startswith("digraph")


def test_normality_certify(capsys):
    _, out, _ = run(capsys, "normality", "certify", "--gens", "a,baB", "--degree", "1",
                    "--pred", "infinite", "--radius", "1")
    assert json.loads(out)["verdict"] == "Certified"


def test_outputs_are_byte_identical(capsys):
    argv = ["phi", "--subgroup", "ab,bbA", "--max-size", "5", "--radius", "3", "--seed", "4"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_action_build_verify_export(capsys, tmp_path):
    state = str(tmp_path / "s.json")
    code, out, _ = run(capsys, "action", "build", "--stages", "2", "--state", state)
    assert code == 0 and len(json.loads(out)["stages"]) == 3
    code, out, _ = run(capsys, "action", "verify", "--stage", "2", "--state", state)
    assert code == 0 and json.loads(out)["ok"] is True
    code, out, _ = run(capsys, "action", "export", "--stage", "2", "--depth", "1", "--state", state)
    assert code == 0 and "generators" in json.loads(out)
    code, _, err = run(capsys, "action", "verify", "--stage", "5", "--state", state)
    assert code == 2


def test_action_verify_failure_exits_1(capsys, tmp_path):
    state = tmp_path / "s.json"
    run(capsys, "action", "build", "--stages", "1", "--state", str(state))
    data = json.loads(state.read_text())
    data["stages"][1]["meta"]["folner"] = data["stages"][1]["meta"]["folner"][:1]
    state.write_text(json.dumps(data))
    code, out, _ = run(capsys, "action", "verify", "--stage", "1", "--state", str(state))
    assert code == 1 and json.loads(out)["property_2_folner"] is False


def test_bad_budget(capsys, tmp_path):
    code, _, err = run(capsys, "action", "build", "--budget", "bogus=1",
                       "--state", str(tmp_path / "x.json"))
    assert code == 2
