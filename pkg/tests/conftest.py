import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=int(os.environ.get("JNALG_EXAMPLES", "25")),
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")

import time

ACCEPTANCE_LINES: list[str] = []
_START = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        tr.write_line(line)
    wall = time.perf_counter() - _START
    verdict = "PASS" if wall < 300 else "FAIL"
    tr.write_line(f"{verdict} criterion 8 (suite wall-clock): {wall:.1f} s, limit 300 s")
