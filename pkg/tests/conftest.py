import re

import numpy as np
import pytest

from rfeval.rng import Rng


@pytest.fixture
def rng():
    return Rng(1234)


def random_f32(seed, shape, low=-1.0, high=1.0):
    return Rng(seed).uniform(low, high, shape)


# --------------------------------------------------------------------------
# Acceptance reporting: one PASS/FAIL line per criterion in the summary.

ACCEPTANCE_CRITERIA = {
    1: "analytic FID oracle (N=10k, D=8, <5%)",
    2: "matrix-sqrt residual (100 SPD, D=64)",
    3: "KID brute-force equivalence (<1e-9)",
    4: "precision/recall sanity",
    5: "disturbance FID monotonicity (2k images)",
    6: "sensitivity profile: jitter3 > noise3",
    7: "seed stability: CV and per-seed ordering",
    8: "outlier split / knn oracle / sweep",
    9: "run_experiment determinism",
    10: "feature cache bitwise round-trip",
}
ACCEPTANCE_NOTES = {}
_acceptance_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    num = int(m.group(1))
    if report.when == "call" or report.outcome in ("failed", "skipped"):
        _acceptance_outcomes[num] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_acceptance_outcomes):
        status = {"passed": "PASS"}.get(_acceptance_outcomes[num], "FAIL")
        note = ACCEPTANCE_NOTES.get(num, "")
        line = f"criterion {num:2d}  {ACCEPTANCE_CRITERIA[num]:<42s} {status}"
        if note:
            line += f"  [{note}]"
        terminalreporter.write_line(line)
