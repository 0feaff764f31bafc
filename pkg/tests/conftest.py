"""Shared fixtures: the long default runs reused across acceptance criteria."""

import numpy as np
import pytest

from samlab.harness import ExperimentConfig, run_toy4d


@pytest.fixture(scope="session")
def sam_selection_run():
    """Full-batch run at harness defaults (reused by criteria 3, 5, 6)."""
    cfg = ExperimentConfig.build("toy4d", overrides={"algorithm": "sam"})
    summary, traj = run_toy4d(cfg)
    return cfg, summary, traj


@pytest.fixture(scope="session")
def one_sam_selection_run():
    cfg = ExperimentConfig.build("toy4d", overrides={"algorithm": "one_sam"})
    summary, traj = run_toy4d(cfg)
    return cfg, summary, traj


@pytest.fixture(scope="session")
def asc_selection_run():
    cfg = ExperimentConfig.build("toy4d", overrides={"algorithm": "asc_gd"})
    summary, traj = run_toy4d(cfg)
    return cfg, summary, traj
