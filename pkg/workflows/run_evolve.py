"""Workflow for numerical propagation and Ehrenfest residuals."""

from pathlib import Path

from core.config import ScenarioConfig
from core.logger import get_logger
from core.schemas import RunOutcome
from runners.evolve_runner import EvolveRunner


def evolve_workflow(config: ScenarioConfig, out_dir: str | Path = "output") -> RunOutcome:
    """
    Propagate the configured Gaussian and write one CSV per observable.

    Args:
        config: Scenario whose [evolve] section is used
        out_dir: Output directory

    Returns:
        RunOutcome with conservation, residual and optional convergence checks
    """
    logger = get_logger()
    logger.info("=== Starting Evolve Workflow ===")
    evolve = config.evolve
    logger.info(f"Potential: {evolve.potential}, observables: {', '.join(evolve.observables)}")

    outcome = EvolveRunner(evolve).run(out_dir)

    logger.info("=== Evolve Results ===")
    for check in outcome.checks:
        logger.info(f"{check.name}: {check.detail}")
    return outcome
