import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def chi2_pipeline():
    """The comonotone chi-square example at full grid, built once.

    Returns the report dictionary plus the wall-clock seconds the full
    pipeline took; the acceptance suite asserts the runtime budget.
    """
    from selbounds.cli import chi2_example

    t0 = time.perf_counter()
    report = chi2_example(grid_size=200_001)
    elapsed = time.perf_counter() - t0
    return report, elapsed


@pytest.fixture(scope="session")
def chi2_pipeline_half():
    from selbounds.cli import chi2_example

    return chi2_example(grid_size=100_001)
