import json
import re
from pathlib import Path

import numpy as np
import pytest

ORACLES = Path(__file__).parent / "oracles" / "frozen.json"


@pytest.fixture(scope="session")
def frozen():
    return json.loads(ORACLES.read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------------------
# one pass/fail line per acceptance criterion
# ---------------------------------------------------------------------------

TITLES = {
    1: "structure axioms on the model family; perturbed xi rejected",
    2: "Levi-Civita connection on every catalog chart; AD vs finite differences",
    3: "O'Neill tensor identities on the three catalog submersions",
    4: "second fundamental form of the map; identity-map tension",
    5: "worked-example regression facts",
    6: "lemma suites",
    7: "direct-definition verdict equals criterion verdict",
    8: "fiber/target index pairs",
    9: "byte-identical reports for identical configs",
}

_acceptance: dict = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if m:
        num = int(m.group(1))
        _acceptance[num] = _acceptance.get(num, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_acceptance):
        status = "PASS" if _acceptance[num] else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {status}  {TITLES.get(num, '')}")
