import shutil
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthflow import load_sample  # noqa: E402
from synthflow.standoff import sample_path  # noqa: E402


@pytest.fixture
def lto():
    return load_sample("lto")


@pytest.fixture
def lto_dir(tmp_path):
    src = sample_path("lto")
    d = tmp_path / "corpus"
    d.mkdir()
    shutil.copy(src, d / "lto.ann")
    shutil.copy(src.with_suffix(".txt"), d / "lto.txt")
    return d


@pytest.fixture
def ids_by_text(lto):
    return {e.text: e.id for e in lto.entities}


_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, then assert it."""
    def record(name, ok, detail=""):
        _ACCEPTANCE[name] = (bool(ok), detail)
        print(f"{name}: {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, f"{name} failed: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE, key=lambda n: int(n[2:])):
        ok, detail = _ACCEPTANCE[name]
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")
