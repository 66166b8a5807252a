"""Workflow for the exact counterexample certificate."""

from pathlib import Path

from core.config import ScenarioConfig
from core.logger import get_logger
from core.schemas import RunOutcome
from runners.counterexample_runner import CounterexampleRunner


def counterexample_workflow(config: ScenarioConfig, out_dir: str | Path = "output") -> RunOutcome:
    """
    Assemble the bumps, run every exact check, and write certificate.json.

    Args:
        config: Scenario whose [counterexample] section is used
        out_dir: Output directory

    Returns:
        RunOutcome with one check per certified identity
    """
    logger = get_logger()
    logger.info("=== Starting Counterexample Workflow ===")

    outcome = CounterexampleRunner(config.counterexample, seed=config.seed).run(out_dir)

    failed = [c.name for c in outcome.checks if not c.passed]
    logger.info(f"Certificate written with {len(outcome.checks)} checks, {len(failed)} failed")
    if failed:
        logger.warning(f"Failed checks: {', '.join(failed)}")
    return outcome
