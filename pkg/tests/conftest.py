import pytest

_ACCEPTANCE = {}


@pytest.fixture
def record():
    """Store one summary line for an acceptance criterion."""

    def _record(name, passed, detail):
        line = f"{name} {'PASS' if passed else 'FAIL'}: {detail}"
        _ACCEPTANCE[name] = line
        print(line)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for name in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[name])

