from pathlib import Path

import numpy as np
import pytest

from bmwdesign.dataset import SubjectTable
from bmwdesign.simbench import SyntheticSpec, generate

SAMPLE_CSV = Path(__file__).resolve().parents[1] / "src" / "bmwdesign" / "data" / "sample_fleet.csv"

_ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" -- {detail}" if detail else "")
    _ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def sample_csv() -> Path:
    return SAMPLE_CSV


@pytest.fixture
def fleet_table() -> SubjectTable:
    return generate(SyntheticSpec(seed=0)).table


def make_table(x, ids=None, names=None, target=None, target_name=None) -> SubjectTable:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    ids = ids or [f"s{n}" for n in range(x.shape[0])]
    names = names or [f"f{j}" for j in range(x.shape[1])]
    return SubjectTable.from_arrays(ids, x, names, target, target_name)
