import json
from importlib import resources

import jsonschema
import pytest

from lorsub import catalog
from lorsub.cli import main

SCHEMA = json.loads(resources.files("lorsub").joinpath("report.schema.json").read_text())


def _verify(capsys, *args):
    code = main(["verify", *args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exit_zero_and_schema(capsys):
    code, out, _ = _verify(capsys, "ls-r5-r2", "--suites", "submersion", "antiinv", "lemmas",
                           "--samples", "3", "--detail")
    assert code == 0
    report = json.loads(out)
    jsonschema.validate(report, SCHEMA)
    assert report["verdict"] == "pass"
    assert report["config"]["suites"] == ["submersion", "antiinv", "lemmas"]
    assert len(report["sampling"]["points"]) == 3


def test_exit_one_on_a_failing_suite(capsys):
    code, out, _ = _verify(capsys, "product-r3-r2", "--suites", "lemmas", "--samples", "2")
    assert code == 1
    report = json.loads(out)
    jsonschema.validate(report, SCHEMA)
    assert report["verdict"] == "fail"
    assert not report["suites"][0]["passed"]


def test_zero_phi_negative_control(tmp_path, capsys):
    doc = catalog.entry_to_dict(catalog.load_example("ls-r5-r2"))
    doc["structure"]["phi"] = [["0"] * 5 for _ in range(5)]
    path = tmp_path / "zero.json"
    path.write_text(json.dumps(doc))
    code, out, _ = _verify(capsys, str(path), "--suites", "structure", "--samples", "2")
    assert code == 1
    rows = {r["id"]: r for r in json.loads(out)["suites"][0]["criteria"]}
    assert not rows["rank phi = dim - 1"]["passed"]


def test_malformed_json_reports_position(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"coords": ["x",\n  }')
    code, out, err = _verify(capsys, str(path))
    assert code == 2
    assert "line 2" in err and "column" in err
    jsonschema.validate(json.loads(out), SCHEMA)


def test_bad_expression_in_chart_file(tmp_path, capsys):
    doc = catalog.entry_to_dict(catalog.load_example("model-r2n1(1,-1)"))
    doc["metric"][0][0] = "tan(x1)"
    path = tmp_path / "tan.json"
    path.write_text(json.dumps(doc))
    code, _, err = _verify(capsys, str(path))
    assert code == 2 and "tan" in err


@pytest.mark.parametrize("args", [["no-such-entry"], ["ls-r5-r2", "--samples", "0"],
                                  ["ls-r5-r2", "--tol", "-1"]])
def test_input_errors_exit_two(capsys, args):
    code, _, err = _verify(capsys, *args)
    assert code == 2 and err.startswith("error:")


def test_list_and_export(tmp_path, capsys):
    assert main(["list"]) == 0
    assert capsys.readouterr().out.split() == catalog.list_examples()
    out = tmp_path / "m.json"
    assert main(["export", "model-r2n1", "--n", "2", "--epsilon", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["structure"]["epsilon"] == 1 and len(doc["coords"]) == 5
    assert main(["export", "nothing", "--out", str(out)]) == 2


def test_exported_file_verifies_like_the_entry(tmp_path, capsys):
    out = tmp_path / "e.json"
    main(["export", "ls-r5-r2", "--out", str(out)])
    capsys.readouterr()
    a = _verify(capsys, "ls-r5-r2", "--suites", "submersion", "--samples", "2")
    b = _verify(capsys, str(out), "--suites", "submersion", "--samples", "2")
    ra, rb = json.loads(a[1]), json.loads(b[1])
    assert a[0] == b[0] == 0
    assert ra["suites"] == rb["suites"]


def test_markdown_output(tmp_path, capsys):
    out = tmp_path / "r.md"
    code, _, _ = _verify(capsys, "ls-r5-r2", "--suites", "antiinv", "--samples", "2", "--format", "md",
                         "--out", str(out))
    text = out.read_text()
    assert code == 0
    assert text.startswith("#") and "antiinv" in text and "|" in text


def test_same_seed_same_bytes(capsys):
    a = _verify(capsys, "model-r2n1(1,-1)", "--samples", "4", "--seed", "7")[1]
    b = _verify(capsys, "model-r2n1(1,-1)", "--samples", "4", "--seed", "7")[1]
    c = _verify(capsys, "model-r2n1(1,-1)", "--samples", "4", "--seed", "8")[1]
    assert a == b and a != c
