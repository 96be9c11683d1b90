"""Acceptance suite: every exit criterion at its stated tolerance.

Prints one PASS/FAIL line per criterion; a failed sub-check names the
violated bound. Runtime limits are asserted alongside the numerics.
"""

import pytest

from rocket2d.acceptance import ALL_CRITERIA


@pytest.mark.parametrize("criterion", ALL_CRITERIA, ids=lambda c: c.__name__)
def test_criterion(criterion, capsys):
    result = criterion()
    with capsys.disabled():
        print()
        print(result.line() + f"  [{result.runtime_s:.2f}s / limit {result.runtime_limit_s:.0f}s]")
    assert result.passed, result.line()
    assert result.runtime_s < result.runtime_limit_s, (
        f"criterion {result.number} took {result.runtime_s:.2f}s, "
        f"limit {result.runtime_limit_s:.0f}s"
    )
