import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

RESULTS = {}


def record(label, ok, detail):
    RESULTS[label] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    key = lambda k: (int(k.split()[0]), k)
    for label in sorted(RESULTS, key=key):
        ok, detail = RESULTS[label]
        terminalreporter.write_line(f"criterion {label}: {'PASS' if ok else 'FAIL'}  {detail}")
