import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"
sys.path.insert(0, str(Path(__file__).resolve().parent))

from flarelang.report import analyze_source  # noqa: E402


def corpus_programs():
    return sorted(CORPUS.glob("*.flare"))


def events_for(path: Path):
    script = path.with_name(path.stem + ".events.json")
    return script if script.exists() else None


def rel(path: Path) -> str:
    return path.relative_to(ROOT).as_posix()


def analyze_file(path: Path):
    return analyze_source(path.read_text(encoding="utf-8"), rel(path))


@pytest.fixture(scope="session")
def autodimmer():
    return analyze_file(CORPUS / "autodimmer.flare")


def analyze_text(text: str, file: str = "t.flare"):
    return analyze_source(text, file)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
