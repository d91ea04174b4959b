import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(module.VERDICTS):
        parts = module.VERDICTS[criterion]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = " | ".join(detail for _, detail in parts)
        terminalreporter.write_line(f"criterion {criterion}: {status}  {details}")
