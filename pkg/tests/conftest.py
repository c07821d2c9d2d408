import sys

import pytest

from distmarket import scenarios


@pytest.fixture(scope="session")
def ieee13():
    return scenarios.ieee13_fixture()


@pytest.fixture(scope="session")
def case1(ieee13):
    return scenarios.case1_sweep(ieee13)


@pytest.fixture(scope="session")
def case2(ieee13):
    return scenarios.case2_sweep(ieee13)


@pytest.fixture(scope="session")
def case3(ieee13):
    return scenarios.case3_sweep(ieee13)



def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
