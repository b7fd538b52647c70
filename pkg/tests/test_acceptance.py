"""End-to-end acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line with the measured values. Run
directly (``python3 tests/test_acceptance.py``) for the summary alone.
"""

import sys

import pytest

from dyens.verify import ACCEPTANCE, format_line, run_check, run_suite


@pytest.mark.acceptance
@pytest.mark.parametrize("check", ACCEPTANCE, ids=[c.key for c in ACCEPTANCE])
def test_acceptance(check, capsys):
    passed, detail, dt = run_check(check)
    with capsys.disabled():
        print("\n" + format_line(check, passed, detail, dt), flush=True)
    assert passed, detail


if __name__ == "__main__":
    sys.exit(0 if run_suite("acceptance") else 1)
