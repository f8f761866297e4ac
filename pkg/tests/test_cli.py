import json
from pathlib import Path

import pytest

from antiderham.cli import main

EXAMPLES = Path(__file__).resolve().parent.parent / "docs" / "examples"


def run(tmp_path, command, spec, *extra, name="out.json"):
    if isinstance(spec, dict):
        path = tmp_path / ("%s_spec.json" % command)
        path.write_text(json.dumps(spec))
    else:
        path = EXAMPLES / spec
    out = tmp_path / name
    code = main([command, "--spec", str(path), "--out", str(out), *extra])
    text = out.read_text()
    return code, (json.loads(text) if "--report" not in extra else text)


def hats(axis):
    return [{"bspline": {"axis": axis, "degree": 1, "interval": ["%d/3" % j, "%d/3" % (j + 2)]}}
            for j in range(3)]


def torus_embed_spec(extra_form):
    form = {"add": [{"pullback_standard": True}, extra_form]}
    return {
        "domain": {"kind": "torus", "n": 2},
        "cover": {"degree": 1, "resolution": 3},
        "map": {"coordinates": hats(0) + hats(1), "declared_embedding": True},
        "form": form,
        "task": {"command": "embed"},
    }


def test_primitive_exit_zero(tmp_path):
    code, out = run(tmp_path, "primitive", "box_exact_2form.json")
    assert code == 0
    assert out["status"] == "EXACT_OK" and out["verified"]


def test_not_exact_exit_two_with_period(tmp_path):
    code, out = run(tmp_path, "primitive", "torus_area_form.json")
    assert code == 2
    assert out["status"] == "NOT_EXACT"
    assert out["certificate"]["periods"] == {"0,1": "1"}


def test_malformed_input_exit_64(tmp_path):
    code, out = run(tmp_path, "primitive", "malformed.json")
    assert code == 64
    assert out["status"] == "INPUT_ERROR"
    assert any("domain" in d for d in out["diagnostics"])
    assert any("form" in d for d in out["diagnostics"])


def test_missing_file_exit_64(tmp_path):
    code = main(["primitive", "--spec", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")])
    assert code == 64


def test_command_mismatch_exit_64(tmp_path):
    code, out = run(tmp_path, "check-exact", "box_exact_2form.json")
    assert code == 64 and "primitive" in out["error"]


def test_check_exact_zero_form(tmp_path):
    spec = {"domain": {"kind": "torus", "n": 2}, "cover": {"degree": 1, "resolution": 3},
            "form": {"degree": 2, "components": []}, "task": {"command": "check-exact"}}
    code, out = run(tmp_path, "check-exact", spec)
    assert code == 0 and out["status"] == "exact"


def test_check_exact_example(tmp_path):
    code, out = run(tmp_path, "check-exact", "torus_check_exact.json")
    assert code == 0 and out["status"] == "exact"


def test_periods_example(tmp_path):
    code, out = run(tmp_path, "periods", "torus_periods.json")
    assert code == 0 and out["period"] == "1"


def test_non_closed_form_is_input_error(tmp_path):
    spec = {"domain": {"kind": "box", "bounds": [[0, 1], [0, 1]]}, "cover": {"degree": 1, "resolution": 2},
            "form": {"degree": 1, "components": [{"index": [0], "coefficient": {"coord": 1}}]},
            "task": {"command": "primitive"}}
    code, out = run(tmp_path, "primitive", spec)
    assert code == 64 and "NotClosed" in out["error"]


def test_embed_box_example(tmp_path):
    code, out = run(tmp_path, "embed", "embed_box.json")
    assert code == 0 and out["status"] == "IDENTITY_OK"
    rep = out["report"]
    assert rep["target_dimension"] == rep["expected_dimension"]


def test_embed_family_example(tmp_path):
    code, out = run(tmp_path, "embed", "embed_family.json")
    assert code == 0
    assert out["report"]["relative_vanishing"] and out["report"]["eta_vanishes_on_U"]


def test_embed_torus_exact_discrepancy(tmp_path):
    extra = {"d": {"degree": 1, "components": [{"index": [0], "coefficient": hats(1)[0]}]}}
    code, out = run(tmp_path, "embed", torus_embed_spec(extra))
    assert code == 0 and out["report"]["target_identity"]


def test_embed_torus_non_exact_discrepancy(tmp_path):
    extra = {"degree": 2, "components": [{"index": [0, 1], "coefficient": 1}]}
    code, out = run(tmp_path, "embed", torus_embed_spec(extra))
    assert code == 2 and out["status"] == "NOT_EXACT"
    assert out["certificate"]["periods"] == {"0,1": "1"}


def test_embed_needs_declared_embedding(tmp_path):
    spec = json.loads((EXAMPLES / "embed_box.json").read_text())
    spec["map"]["declared_embedding"] = False
    code, out = run(tmp_path, "embed", spec)
    assert code == 64


def test_text_report(tmp_path):
    code, text = run(tmp_path, "primitive", "torus_area_form.json", "--report", "text", name="out.txt")
    assert code == 2
    assert "status: NOT_EXACT" in text and "periods:" in text


def test_reruns_are_bit_identical(tmp_path):
    for cmd, name in [("primitive", "box_exact_2form.json"), ("embed", "embed_box.json"),
                      ("check-exact", "torus_check_exact.json")]:
        run(tmp_path, cmd, name, name="a.json")
        run(tmp_path, cmd, name, name="b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_timing_goes_to_stderr(tmp_path, capsys):
    main(["periods", "--spec", str(EXAMPLES / "torus_periods.json")])
    captured = capsys.readouterr()
    assert "finished in" in captured.err
    assert "finished in" not in captured.out
    json.loads(captured.out)


@pytest.mark.parametrize("seed", [0, 17])
def test_selftest_passes(tmp_path, seed):
    out = tmp_path / "st.json"
    code = main(["selftest", "--seed", str(seed), "--count", "5", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())["status"] == "pass"


def test_selftest_detects_sign_flip(tmp_path):
    out = tmp_path / "st.json"
    code = main(["selftest", "--count", "5", "--inject-fault", "sign-flip", "--out", str(out)])
    assert code != 0
    failed = {r["name"] for r in json.loads(out.read_text())["identities"] if r["status"] == "fail"}
    assert failed
