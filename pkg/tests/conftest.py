import functools
from collections import defaultdict

import pytest

from irrsobol.construct import SequenceSpec, build_sequence


@functools.lru_cache(maxsize=None)
def isn_sequence(dim: int, ordering: str, rows: int = 32, cols: int = 32, base: int = 2):
    return tuple(build_sequence(SequenceSpec(base=base, dim=dim, ordering=ordering), rows, cols))


@pytest.fixture(scope="session")
def isn():
    """Cached ISN sequence builder: isn(dim, ordering, rows=32, cols=32)."""
    return isn_sequence


# --- acceptance summary -------------------------------------------------------------------------

_criteria: dict[str, list[tuple[str, str]]] = defaultdict(list)


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[crit].append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_criteria, key=int):
        results = _criteria[crit]
        failed = [name for name, outcome in results if outcome != "passed"]
        status = "PASS" if not failed else "FAIL"
        line = f"criterion {crit}: {status} ({len(results) - len(failed)}/{len(results)} checks)"
        if failed:
            line += " failing: " + ", ".join(failed)
        tr.write_line(line)
