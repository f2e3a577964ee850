import numpy as np
import pytest


@pytest.fixture
def rng():
    # one fixed stream for every randomized test; bump the seed only with
    # a reason recorded in the test
    return np.random.default_rng(20250823)


# one PASS/FAIL line per acceptance criterion at the end of the run
_acceptance_results = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance_results[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid in sorted(_acceptance_results):
        name = nodeid.split("::")[-1]
        verdict = "PASS" if _acceptance_results[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
