import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from helpers import ACCEPTANCE_LINES, DESCENT_LOG  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES and not DESCENT_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("[", 1)[1]):
        terminalreporter.write_line(line)
    if DESCENT_LOG:
        bad = sum(1 for entry in DESCENT_LOG if entry[2])
        iters = sum(entry[1] for entry in DESCENT_LOG)
        terminalreporter.write_line(
            f"{'PASS' if not bad else 'FAIL'} [acc07 suite-wide] sufficient decrease checked on "
            f"{len(DESCENT_LOG)} further solver runs ({iters} accepted iterations), "
            f"{bad} with violations")
