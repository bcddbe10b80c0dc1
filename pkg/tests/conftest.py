import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile("fast", max_examples=10)


@pytest.fixture
def rng():
    return np.random.default_rng(20200823)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[num])
