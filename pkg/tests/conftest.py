import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}
_RAN: dict[int, str] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_(\d+)_(\w+)", report.nodeid)
    if m and report.when == "call":
        _RAN[int(m.group(1))] = m.group(2).replace("_", " ")


def pytest_terminal_summary(terminalreporter):
    if not _RAN:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RAN):
        title, ok, detail = ACCEPTANCE.get(n, (_RAN[n], False, "raised before its check"))
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
