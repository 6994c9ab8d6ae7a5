import time
from dataclasses import dataclass

import pytest

from pprfraud.config import load_config
from pprfraud.pipeline import run_pipeline

# (criterion id, description, passed, detail), filled by test_acceptance
ACCEPTANCE: list[tuple[str, str, bool, str]] = []


@dataclass
class PipelineRun:
    cfg: object
    result: dict
    seconds: float

    @property
    def out(self):
        return self.cfg.out_dir


@pytest.fixture(scope="session")
def default_run(tmp_path_factory):
    """The documented seeded configuration, run end to end once per session."""
    out = tmp_path_factory.mktemp("default_run")
    cfg = load_config(None, {"out_dir": str(out)})
    start = time.perf_counter()
    result = run_pipeline(cfg)
    return PipelineRun(cfg, result, time.perf_counter() - start)


@pytest.fixture
def record():
    def _record(cid: str, description: str, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE.append((cid, description, bool(passed), detail))
        return bool(passed)

    return _record


def _order(entry):
    cid = entry[0]
    return (0, int(cid), "") if cid.isdigit() else (1, 0, cid)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, description, passed, detail in sorted(ACCEPTANCE, key=_order):
        line = f"{'PASS' if passed else 'FAIL'} [{cid}] {description}"
        terminalreporter.write_line(f"{line}: {detail}" if detail else line)
