import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=int(os.environ.get("HALIGN_EXAMPLES", "60")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record_criterion():
    def record(k: int, ok: bool, detail: str):
        ACCEPTANCE[k] = (bool(ok), detail)
        print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return record
