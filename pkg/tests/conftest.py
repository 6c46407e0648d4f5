import pytest

# filled by tests/test_acceptance.py: criterion number -> (passed, message)
ACCEPTANCE_RESULTS = {}


@pytest.fixture
def acceptance():
    def record(number, passed, message):
        ACCEPTANCE_RESULTS[number] = (bool(passed), message)
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {message}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, message = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {number}: {message}")
