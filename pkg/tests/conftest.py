"""Shared fixtures: reference-oracle access and the shipped scenario."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).parent
DATA_DIR = TESTS_DIR / "data"
SCENARIO_DIR = TESTS_DIR.parent / "scenarios" / "panel_sat"

sys.path.insert(0, str(TESTS_DIR / "reference"))


@pytest.fixture(scope="session")
def scenario_config():
    """The shipped panel-satellite scenario, parsed through the CLI loader."""
    from deglint.cli import load_config

    return load_config(SCENARIO_DIR / "config.cfg")


@pytest.fixture(scope="session")
def scenario_inspection(scenario_config):
    return scenario_config.inspection()


@pytest.fixture(scope="session")
def shipped_run(scenario_inspection):
    """One full default optimisation of the shipped scenario.

    Several acceptance criteria and optimiser properties read this run, so
    it executes once per session.
    """
    import time

    from deglint.optimizer import optimize

    start = time.perf_counter()
    result = optimize(scenario_inspection)
    result.wall_seconds = time.perf_counter() - start
    return result
