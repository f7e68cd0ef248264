"""Deterministic seeding and the verification report document."""

import json
from importlib import resources

import jsonschema
import numpy as np

from weilcalc.reports import (
    CONVENTIONS,
    REPORT_VERSION,
    Report,
    assemble_document,
    document_dumps,
    documents_equal,
    report_from_check,
    rng_for,
)


def test_rng_for_is_reproducible_and_qualifier_sensitive():
    a = rng_for(7, "bracket", 3).uniform(size=4)
    b = rng_for(7, "bracket", 3).uniform(size=4)
    c = rng_for(7, "bracket", 4).uniform(size=4)
    d = rng_for(8, "bracket", 3).uniform(size=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_report_from_check_maps_failures_to_status():
    ok = report_from_check("sigma", "S", {"max_error": 0.0, "samples": 25, "failures": []})
    assert ok.status == "pass"
    bad = report_from_check(
        "sigma", "S", {"max_error": 2.0, "samples": 25, "failures": [{"trial": 3, "deviation": 2.0}]}
    )
    assert bad.status == "fail"
    assert bad.failures[0]["trial"] == 3


def test_document_assembly():
    reports = [
        Report("sigma", "S", 25, 0.0, "pass", ()),
        Report("locality", "F(1;1,1;2)", 20, 1e-16, "pass", ()),
    ]
    doc = assemble_document(reports, seed=7)
    assert doc["version"] == REPORT_VERSION == 1
    assert doc["seed"] == 7
    assert doc["status"] == "pass"
    assert doc["conventions"] == CONVENTIONS
    assert len(doc["suites"]) == 2
    assert isinstance(doc["generated_at"], str)


def test_any_failing_unit_fails_the_document():
    reports = [
        Report("sigma", "S", 25, 0.0, "pass", ()),
        Report("bracket", "dual", 5, 9.0, "fail", ({"trial": 0, "deviation": 9.0},)),
    ]
    assert assemble_document(reports, seed=0)["status"] == "fail"


def test_documents_equal_ignores_only_the_timestamp():
    reports = [Report("sigma", "S", 25, 0.0, "pass", ())]
    a = assemble_document(reports, seed=1)
    b = assemble_document(reports, seed=1)
    b["generated_at"] = "2000-01-01T00:00:00Z"
    assert documents_equal(a, b)
    b["seed"] = 2
    assert not documents_equal(a, b)


def test_dumps_is_stable():
    reports = [Report("sigma", "S", 25, 0.0, "pass", ())]
    doc = assemble_document(reports, seed=1)
    assert document_dumps(doc) == document_dumps(doc)
    assert document_dumps(doc).endswith("\n")
    json.loads(document_dumps(doc))


def test_document_validates_against_the_packaged_schema():
    schema = json.loads(
        resources.files("weilcalc").joinpath("data/report.schema.json").read_text()
    )
    reports = [
        Report("sigma", "S", 25, 0.0, "pass", ()),
        Report("bracket", "dual", 5, 9.0, "fail", ({"trial": 0, "deviation": 9.0},)),
    ]
    doc = assemble_document(reports, seed=3)
    jsonschema.validate(json.loads(document_dumps(doc)), schema)
