"""The ten acceptance criteria at their stated tolerances, one line each.

The lines are repeated in the terminal summary. Running this file directly
prints the same table without pytest.
"""

import pytest

from kirlab.acceptance import CRITERIA, run_criterion

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = {}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    res = run_criterion(number)
    line = res.line()
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert not res.error, res.error
    assert res.passed, line


if __name__ == "__main__":
    for n in sorted(CRITERIA):
        print(run_criterion(n).line())
