"""Command line behavior: exit codes, output text, report files."""

import json
from importlib import resources

import jsonschema
import pytest

from weilcalc import cli, strongdiff
from weilcalc.algebra import algebra_to_json, make_basic, save_algebra
from weilcalc.exprs import Const, Var, intpow
from weilcalc.functional import FunctionalVectorField, functional_field_to_json
from weilcalc.programs import Program, VectorField, field_to_json
from weilcalc.reports import documents_equal


@pytest.fixture
def manifold_fields(tmp_path):
    sq = tmp_path / "sq.json"
    one = tmp_path / "one.json"
    sq.write_text(json.dumps(field_to_json(VectorField(1, Program(1, [intpow(Var(0), 2)])))))
    one.write_text(json.dumps(field_to_json(VectorField(1, Program(1, [Const(1.0)])))))
    return str(sq), str(one)


@pytest.fixture
def functional_fields(tmp_path):
    zero = Program(1, [Const(0.0)])
    x1 = FunctionalVectorField(1, 1, 1, 0, zero, Program(3, [Var(1) * Var(2)]))
    x2 = FunctionalVectorField(1, 1, 1, 1, zero, Program(4, [Var(3)]))
    p1 = tmp_path / "f1.json"
    p2 = tmp_path / "f2.json"
    p1.write_text(json.dumps(functional_field_to_json(x1)))
    p2.write_text(json.dumps(functional_field_to_json(x2)))
    return str(p1), str(p2)


# -- verify ---------------------------------------------------------------------


def test_verify_single_suite(capsys):
    rc = cli.main(["verify", "--suite", "sigma", "--seed", "7"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "pass sigma" in out
    assert "overall: pass (1/1 units)" in out


def test_verify_unknown_suite(capsys):
    rc = cli.main(["verify", "--suite", "nope"])
    assert rc == 2
    assert "unknown suite" in capsys.readouterr().err


def test_verify_rejects_bad_numbers(capsys):
    assert cli.main(["verify", "--suite", "sigma", "--tol", "-1"]) == 2
    assert cli.main(["verify", "--suite", "sigma", "--samples", "0"]) == 2


def test_verify_tolerance_cannot_tighten_an_exact_suite():
    assert cli.main(["verify", "--suite", "sigma", "--tol", "1e-99"]) == 0


def test_verify_report_is_deterministic_and_schema_valid(tmp_path, capsys):
    suites = "sigma,projection-squares,locality"
    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["verify", "--suite", suites, "--seed", "7", "--report", str(r1)]) == 0
    assert cli.main(["verify", "--suite", suites, "--seed", "7", "--report", str(r2)]) == 0
    capsys.readouterr()
    doc1 = json.loads(r1.read_text())
    doc2 = json.loads(r2.read_text())
    assert documents_equal(doc1, doc2)
    schema = json.loads(
        resources.files("weilcalc").joinpath("data/report.schema.json").read_text()
    )
    jsonschema.validate(doc1, schema)
    assert doc1["seed"] == 7 and doc1["status"] == "pass"


def test_thread_count_does_not_change_the_report(tmp_path, capsys, monkeypatch):
    suites = "sigma,locality"
    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["verify", "--suite", suites, "--seed", "3", "--report", str(r1)]) == 0
    monkeypatch.setenv("WEILCALC_THREADS", "4")
    assert cli.main(["verify", "--suite", suites, "--seed", "3", "--report", str(r2)]) == 0
    capsys.readouterr()
    assert documents_equal(json.loads(r1.read_text()), json.loads(r2.read_text()))


def test_malformed_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("WEILCALC_THREADS", "many")
    assert cli.main(["verify", "--suite", "sigma"]) == 2


def test_verify_reports_failures_with_exit_one(capsys, monkeypatch):
    def broken():
        return {"max_error": 2.0, "samples": 1, "failures": [{"trial": 0, "deviation": 2.0}]}

    monkeypatch.setattr(strongdiff, "check_sigma", broken)
    rc = cli.main(["verify", "--suite", "sigma"])
    out = capsys.readouterr().out
    assert rc == 1
    assert "fail" in out
    assert "overall: fail" in out


def test_verify_unwritable_report_path(capsys):
    rc = cli.main(["verify", "--suite", "sigma", "--report", "/nonexistent/dir/r.json"])
    assert rc == 2


def test_verify_algebra_override(capsys, tmp_path):
    rc = cli.main(["verify", "--suite", "exchange-square", "--algebra", "dual", "--samples", "5"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "dual" in out
    assert "(1/1 units)" in out
    # the same algebra provided as a file
    path = tmp_path / "d.json"
    save_algebra(make_basic("dual"), path)
    rc = cli.main(["verify", "--suite", "exchange-square", "--algebra", str(path), "--samples", "5"])
    assert rc == 0


def test_verify_with_a_custom_field_pair(capsys, manifold_fields):
    sq, one = manifold_fields
    rc = cli.main(
        ["verify", "--suite", "bracket", "--samples", "5", "--field", sq, "--field", one]
    )
    out = capsys.readouterr().out
    assert rc == 0
    assert "custom pair" in out


# -- bracket --------------------------------------------------------------------


def test_bracket_renders_and_evaluates(capsys, manifold_fields):
    sq, one = manifold_fields
    rc = cli.main(["bracket", "--field", sq, "--field", one])
    out = capsys.readouterr().out
    assert rc == 0
    assert "-2*x" in out
    rc = cli.main(["bracket", "--field", sq, "--field", one, "--at", "3"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "-6" in out


def test_bracket_of_a_field_with_itself_is_zero(capsys, manifold_fields):
    sq, _ = manifold_fields
    rc = cli.main(["bracket", "--field", sq, "--field", sq])
    out = capsys.readouterr().out
    assert rc == 0
    assert "= 0" in out


def test_functional_bracket_output(capsys, functional_fields):
    f1, f2 = functional_fields
    rc = cli.main(["bracket", "--field", f1, "--field", f2])
    out = capsys.readouterr().out
    assert rc == 0
    assert "D_0 = z0" in out


def test_bracket_usage_errors(capsys, manifold_fields, functional_fields, tmp_path):
    sq, _ = manifold_fields
    f1, _ = functional_fields
    assert cli.main(["bracket", "--field", sq]) == 2  # needs exactly two
    assert cli.main(["bracket", "--field", sq, "--field", f1]) == 2  # mixed kinds
    assert cli.main(["bracket", "--field", f1, "--field", f1, "--at", "1"]) == 2
    dim2 = tmp_path / "dim2.json"
    dim2.write_text(
        json.dumps(field_to_json(VectorField(2, Program(2, [Var(0), Var(1)]))))
    )
    assert cli.main(["bracket", "--field", sq, "--field", str(dim2)]) == 2


# -- algebra --------------------------------------------------------------------


def test_algebra_show(capsys):
    rc = cli.main(["algebra", "show", "truncated(1,2)"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "dim 3, width 1, height 2" in out
    assert "x * x = x^2" in out


def test_algebra_check_constructor_expression(capsys):
    assert cli.main(["algebra", "check", "tensor(dual, truncated(2,1))"]) == 0
    assert cli.main(["algebra", "check", "tensor(S(), dual)"]) == 0


def test_algebra_build_pair_algebra_prints_sigma(capsys):
    rc = cli.main(["algebra", "build", "S()", "--show"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "e1e2 -> e" in out
    assert "E1E2 -> -e" in out


def test_algebra_build_writes_a_loadable_document(tmp_path, capsys):
    path = tmp_path / "t12.json"
    rc = cli.main(["algebra", "build", "truncated(1,2)", "--report", str(path)])
    assert rc == 0
    doc = json.loads(path.read_text())
    assert doc == algebra_to_json(make_basic("truncated", 1, 2))


def test_algebra_check_flags_axiom_failures(tmp_path, capsys):
    doc = algebra_to_json(make_basic("dual"))
    doc["structure"] = doc["structure"] + [[1, 1, 0, 1.0]]
    del doc["height"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    rc = cli.main(["algebra", "check", str(path)])
    captured = capsys.readouterr()
    assert rc == 1
    assert "axiom failure" in captured.out + captured.err


def test_algebra_rejects_malformed_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{this is not json")
    rc = cli.main(["algebra", "check", str(path)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "invalid JSON" in err
    assert "broken.json:1:" in err


def test_algebra_rejects_unknown_constructors(capsys):
    assert cli.main(["algebra", "check", "bogus(1,2)"]) == 2
    assert cli.main(["algebra", "check", "tensor(dual"]) == 2
