import pytest

import support


@pytest.fixture(scope="session")
def patient_doc():
    return support.patient_doc()


@pytest.fixture
def dupond_store():
    return support.replay()


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
