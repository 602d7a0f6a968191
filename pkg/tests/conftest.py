import sys
from pathlib import Path

# lets test modules share helpers such as oracles.py
sys.path.insert(0, str(Path(__file__).parent))

import acceptance_log  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    results = acceptance_log.RESULTS
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, acceptance_log.TOTAL + 1):
        if n in results:
            terminalreporter.write_line(results[n][1])
        else:
            terminalreporter.write_line(f"criterion {n:2d} [FAIL] not evaluated")
