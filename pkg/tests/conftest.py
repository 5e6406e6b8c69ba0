import pytest

from edgecurrents.model import ModelParams


@pytest.fixture
def params():
    return ModelParams(B=1.0, L=12, V0=0.2, epsilon=0.05)


@pytest.fixture
def small_params():
    return ModelParams(B=1.0, L=8, V0=0.2, epsilon=0.05)


VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[VERDICTS] = []


@pytest.fixture
def verdict(request, capsys):
    """Print one PASS/FAIL line for an acceptance criterion, then assert it."""
    def emit(number: int, title: str, ok: bool, detail: str):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
        request.config.stash[VERDICTS].append((number, line))
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
