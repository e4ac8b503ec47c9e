"""Shared fixtures for the expensive Monte Carlo runs.

The 2000-replicate null run and the stored null AUC distribution are reused
across several test modules, so they are computed once per session.
"""

import time

import pytest

from bayesgof.harness import (
    ExperimentConfig,
    null_auc_distribution,
    null_calibration,
    power_study,
)

# verdict lines recorded by the acceptance tests; replayed after the run so
# they land on the real terminal rather than in pytest's captured stdout
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def null_run_2000():
    """Normal-model null calibration with the classical comparators.

    Returns (result, wall_seconds); the timing feeds the runtime budget check.
    """
    cfg = ExperimentConfig(
        model="normal", n=50, bins=5, replicates=2000, seed=8, include_classical=True
    )
    t0 = time.perf_counter()
    res = null_calibration(cfg)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def stored_auc_null():
    """Null distribution of the tail-area summary, 2000 datasets x 500 draws."""
    cfg = ExperimentConfig(
        model="normal", n=50, bins=5, replicates=2000, seed=11, draws_per_dataset=500
    )
    return null_auc_distribution(cfg)


@pytest.fixture(scope="session")
def power_result(stored_auc_null):
    """Rejection rates against t alternatives at df 1, 2, 3, 5, 10."""
    cfg = ExperimentConfig(
        model="normal", n=50, bins=5, replicates=1000, seed=500,
        draws_per_dataset=500, df_grid=(1, 2, 3, 5, 10),
    )
    return power_study(cfg, stored_auc_null.critical)
