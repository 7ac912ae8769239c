import os
from pathlib import Path

import pytest

from wwls.graph import parse_tud_dataset

ROOT = Path(__file__).resolve().parents[1]

# criterion -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def find_dataset(name: str) -> Path | None:
    """Directory holding ``<name>_A.txt``: $WWLS_DATA, then ./data, each flat or with a subdir."""
    roots = [Path(p) for p in os.environ.get("WWLS_DATA", "").split(os.pathsep) if p]
    roots.append(ROOT / "data")
    for root in roots:
        for d in (root / name, root):
            if (d / f"{name}_A.txt").is_file():
                return d
    return None


def load_dataset(name: str):
    d = find_dataset(name)
    return None if d is None else parse_tud_dataset(d, name)


@pytest.fixture
def tud_or_skip():
    def get(name):
        ds = load_dataset(name)
        if ds is None:
            pytest.skip(f"{name} not found (set WWLS_DATA to a directory with TUD files)")
        return ds
    return get


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
