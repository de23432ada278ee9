import pytest

from qlink.config import load_preset

_ACCEPTANCE = []


def record(criterion: str, passed: bool, detail: str) -> None:
    _ACCEPTANCE.append((criterion, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")


@pytest.fixture(scope="session")
def paper_500m():
    return load_preset("paper_500m").architecture()


@pytest.fixture(scope="session")
def paper_b2b():
    return load_preset("paper_b2b").architecture()


@pytest.fixture(scope="session")
def ideal():
    return load_preset("ideal").architecture()
