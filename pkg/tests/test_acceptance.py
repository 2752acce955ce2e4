"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a single ``[PASS]`` / ``[FAIL]`` line (visible even under
output capture).  The table4 criteria share one cached Monte Carlo run.
"""

import os

import pytest

from noma_esg import acceptance

THREADS = min(8, os.cpu_count() or 1)


@pytest.mark.slow
@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda fn: fn.__name__)
def test_criterion(criterion, capsys):
    res = criterion(threads=THREADS)
    with capsys.disabled():
        print("\n" + acceptance.format_result(res))
    assert res.passed, res.detail
