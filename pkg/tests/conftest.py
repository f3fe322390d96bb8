import json
import os
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_LINES = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:2d}: {detail}"
    _LINES[criterion] = line
    sys.__stdout__.write("\n" + line + "\n")
    sys.__stdout__.flush()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_LINES):
        terminalreporter.write_line(_LINES[k])


@pytest.fixture(scope="session")
def full_run(tmp_path_factory):
    """One default-config end-to-end run shared by the acceptance criteria."""
    from ntnet.config import TrainConfig
    from ntnet.experiment import run_experiment

    out = tmp_path_factory.mktemp("full_run")
    t = time.perf_counter()
    metrics = run_experiment(TrainConfig(log_every=0), str(out))
    timings = json.loads((out / "timings.json").read_text())
    timings["wall_s"] = time.perf_counter() - t
    return {"metrics": metrics, "timings": timings, "dir": out}
