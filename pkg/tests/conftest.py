import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line, then fail the test if the criterion is not met."""

    def report(number, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + (f" ({detail})" if detail else "")
        _CRITERIA.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pipeline_runs(tmp_path_factory):
    """Three default ``pipeline --seed 42`` runs: threads 1, threads 3, threads 1 again."""
    from lzmreid.cli import run

    root = tmp_path_factory.mktemp("pipeline")
    dirs = []
    for name, threads in (("a", 1), ("b", 3), ("c", 1)):
        out = root / name
        code = run(["pipeline", "--seed", "42", "--out", str(out), "--threads", str(threads)])
        assert code == 0
        dirs.append(out)
    return dirs
