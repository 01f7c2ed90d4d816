import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from bpvar.corpus import corpus_root  # noqa: E402
from bpvar.vardl import load_document  # noqa: E402

CORPUS = corpus_root()


def corpus_doc(case: str, name: str):
    """``name`` is an approach file stem or ``golden/vN``."""
    return load_document(CORPUS / case / f"{name}.vardl")


def golden(case: str, variant: str):
    return corpus_doc(case, f"golden/{variant.lower()}").base


def corpus_files():
    return sorted(CORPUS.glob("*/*.vardl")) + sorted(CORPUS.glob("*/golden/*.vardl"))


@pytest.fixture(scope="session")
def corpus():
    return CORPUS


# -- acceptance reporting ------------------------------------------------------

_verdicts = {}


@pytest.fixture
def criterion(request):
    """Record one acceptance verdict; the summary prints them in order."""
    number = int(request.node.name.split("_")[2])
    _verdicts[number] = (False, "(did not finish)")

    def record(number: int, ok: bool, detail: str = "") -> bool:
        _verdicts[number] = (ok, detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n, (ok, detail) in sorted(_verdicts.items()):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
