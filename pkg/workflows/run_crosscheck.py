"""Workflow for comparing the discretised counterexample with its exact values."""

from pathlib import Path

from core.config import ScenarioConfig
from core.logger import get_logger
from core.schemas import RunOutcome
from runners.crosscheck_runner import CrosscheckRunner


def crosscheck_workflow(config: ScenarioConfig, out_dir: str | Path = "output") -> RunOutcome:
    """Discretise the exact observable on a grid and write crosscheck.json."""
    logger = get_logger()
    logger.info("=== Starting Crosscheck Workflow ===")

    runner = CrosscheckRunner(config.crosscheck)
    outcome = runner.run(out_dir)

    logger.info(f"Cross-checked {len(runner.system)} bumps")
    return outcome
