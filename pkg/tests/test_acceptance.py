"""Acceptance criteria A1-A12 at their stated tolerances.

Each test prints one PASS/FAIL line with the measured values; the lines are
repeated in an ``acceptance criteria`` section of the terminal summary.
"""

import pytest

from dtwa_ising import acceptance


@pytest.mark.parametrize("name", list(acceptance.CHECKS))
def test_criterion(name, acceptance_log):
    result = acceptance.run_check(name)
    line = result.line()
    print(line)
    acceptance_log.append(line)
    assert result.passed, line
