"""Shared by the test modules: a session-wide cache of CLI runs."""

import math

from lorsub.cli import RunConfig, run

_reports: dict = {}


def cached_report(name, **kw):
    """Run the CLI pipeline once per configuration for the whole session."""
    key = (name, tuple(sorted(kw.items())))
    if key not in _reports:
        _reports[key] = run(RunConfig(input=name, **kw))
    return _reports[key]


def rows(report, suite=None):
    out = {}
    for block in report["suites"]:
        if suite is None or block["name"] == suite:
            for r in block.get("criteria", []):
                out[r["id"]] = r
    return out


def worst(row) -> float:
    w = row["worst_residual"]
    return float(w) if not isinstance(w, str) else math.inf
