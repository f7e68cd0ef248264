"""Verification reports: one entry per (suite, algebra) unit.

Every check function in the package returns a plain dict with the keys
max_error, samples and failures; this module wraps those into report
entries with a fixed key set and assembles full documents.  Randomness
for a unit is derived by hashing (seed, suite, qualifier), so units are
reproducible independently of execution order or thread count.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

REPORT_VERSION = 1

# orientation and layout choices that reports are implicitly relative to
CONVENTIONS = {
    "bracket": "bracket(X, Y) = DY.X - DX.Y",
    "second_tangent_slots": "(base, u, v, w), u the outer tangent direction",
    "tensor_layout": "left factor major: basis index i*dimB + j",
    "point_layout": "coordinate major: coefficient a of coordinate i at i*dimA + a",
    "jet_composition": "jet_compose(a, b) means a then b",
    "functional_layout": "x block, y block, then one z block per multi-index in graded order",
}


@dataclass(frozen=True)
class Report:
    suite: str
    algebra: str
    samples: int
    max_error: float
    status: str
    failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "suite": self.suite,
            "algebra": self.algebra,
            "samples": int(self.samples),
            "max_error": float(self.max_error),
            "status": self.status,
            "failures": list(self.failures),
        }


def report_from_check(suite: str, algebra: str, result: dict) -> Report:
    """Wrap a check dict; a unit passes iff it recorded no failures."""
    failures = list(result.get("failures", []))
    return Report(
        suite=suite,
        algebra=algebra,
        samples=int(result.get("samples", 0)),
        max_error=float(result.get("max_error", 0.0)),
        status="pass" if not failures else "fail",
        failures=failures,
    )


def rng_for(seed: int, *qualifiers) -> np.random.Generator:
    """Deterministic generator for one verification unit.

    The unit identity (seed plus any number of string/int qualifiers) is
    hashed, so adding or reordering other units never shifts the stream.
    """
    key = "|".join([str(int(seed))] + [str(q) for q in qualifiers])
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 20, 4)]
    return np.random.default_rng(np.random.SeedSequence(words))


def assemble_document(reports, seed: int) -> dict:
    entries = [r.to_json() if isinstance(r, Report) else dict(r) for r in reports]
    status = "pass" if all(e["status"] == "pass" for e in entries) else "fail"
    return {
        "version": REPORT_VERSION,
        "seed": int(seed),
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "status": status,
        "conventions": dict(CONVENTIONS),
        "suites": entries,
    }


def document_dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def documents_equal(a: dict, b: dict) -> bool:
    """Equality up to the timestamp, the one intentionally varying field."""
    sa = {k: v for k, v in a.items() if k != "generated_at"}
    sb = {k: v for k, v in b.items() if k != "generated_at"}
    return json.dumps(sa, sort_keys=True) == json.dumps(sb, sort_keys=True)
