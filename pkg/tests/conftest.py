from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"

_acceptance: list[tuple[str, str, str]] = []


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def mismatch_dir() -> Path:
    return DATA / "mismatch"


@pytest.fixture
def write(tmp_path):
    """Write ``text`` to a file under tmp_path and return its path."""

    def _write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    doc = ""
    for key, value in report.user_properties:
        if key == "criterion":
            doc = value
    _acceptance.append(("PASS" if report.passed else "FAIL", name, doc))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, doc in _acceptance:
        terminalreporter.write_line(f"[{status}] {doc or name}")
