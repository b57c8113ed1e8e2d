"""Acceptance criteria C1-C11, one test each, each printing a pass/fail line.

Run directly for a plain report: ``python tests/test_acceptance.py``.
"""

import sys

import pytest

from conjloc import acceptance


@pytest.mark.parametrize("k", sorted(acceptance.CRITERIA), ids=lambda k: f"C{k}")
def test_criterion(k, capsys):
    r = acceptance.run_criterion(k)
    with capsys.disabled():
        print("\n" + r.line())
    assert r.passed, r.detail


if __name__ == "__main__":
    results = acceptance.run_suite("all")
    for r in results:
        print(r.line())
    sys.exit(0 if all(r.passed for r in results) else 1)
