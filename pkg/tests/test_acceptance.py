"""Exit criteria 1-11.

Each test runs one criterion at its stated tolerances and prints a
``criterion N: PASS|FAIL`` line.  The lines are collected and repeated in
the terminal summary (see ``conftest.py``).  Run this file directly to get
just the eleven lines.
"""
import sys

import pytest

from qstkernel import acceptance

RESULTS = {}


def _line(n, passed):
    return f"criterion {n}: {'PASS' if passed else 'FAIL'}"


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    report = acceptance.run(number)
    RESULTS[number] = bool(report["passed"])
    print(_line(number, report["passed"]))
    assert report["passed"], report


if __name__ == "__main__":
    ok = True
    for n in sorted(acceptance.CRITERIA):
        passed = bool(acceptance.run(n)["passed"])
        ok &= passed
        print(_line(n, passed), flush=True)
    sys.exit(0 if ok else 1)
