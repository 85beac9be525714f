import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

_CRITERION_LINES = {}


@pytest.fixture
def criterion():
    """Recorder for the acceptance checklist printed after the run."""

    def record(num, passed, detail):
        state = "PASS" if passed else "FAIL"
        _CRITERION_LINES[num] = f"criterion {num:2d}: {state}  {detail}"
        assert passed, f"criterion {num}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERION_LINES):
        terminalreporter.write_line(_CRITERION_LINES[num])
