import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

# criterion id -> list of (ok, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def criterion():
    def record(cid: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE.setdefault(cid, []).append((bool(ok), detail))
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[cid]
        ok = all(p for p, _ in parts)
        detail = "; ".join(f"{'ok' if p else 'FAILED'}: {d}" for p, d in parts)
        tr.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  ({detail})")
