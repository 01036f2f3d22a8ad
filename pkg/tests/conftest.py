import numpy as np
import pytest

from lrsense import make_ground_truth


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def truth():
    return make_ground_truth(12, 9, 3, 2.0, 7)



_ACCEPTANCE_RAN = set()


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if report.when == "call" and name.startswith("test_a") and "test_acceptance" in report.nodeid:
        _ACCEPTANCE_RAN.add(name[5:7].upper())


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RAN:
        return
    from test_acceptance import RESULTS

    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE_RAN | set(RESULTS)):
        terminalreporter.write_line(RESULTS.get(key, f"{key} FAIL  raised before reporting"))
