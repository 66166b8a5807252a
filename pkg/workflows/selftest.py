"""Workflow that runs the reference scenarios and aggregates their checks."""

from datetime import datetime, timezone
from pathlib import Path

from core import __version__
from core.config import (
    CounterexampleConfig,
    CrosscheckConfig,
    EvolveConfig,
    ScenarioConfig,
)
from core.logger import get_logger
from core.schemas import CheckResult, RunManifest
from core.utils import content_hash, write_json_file
from workflows.run_scenario import run_scenario


def reference_scenarios(seed: int = 0) -> dict[str, ScenarioConfig]:
    """Scenarios whose checks make up the selftest."""
    return {
        "counterexample": ScenarioConfig(mode="counterexample", seed=seed, counterexample=CounterexampleConfig(n_bumps=20)),
        "harmonic": ScenarioConfig(
            mode="evolve",
            seed=seed,
            evolve=EvolveConfig(
                t_final=10.0,
                observables=["identity", "position", "momentum", "hamiltonian"],
                convergence_study=True,
            ),
        ),
        "quartic": ScenarioConfig(
            mode="evolve",
            seed=seed,
            evolve=EvolveConfig(
                potential="quartic",
                x0=1.0,
                t_final=10.0,
                observables=["position", "momentum", "hamiltonian"],
                residual_tolerance=5e-5,
                convergence_study=True,
            ),
        ),
        "integrators": ScenarioConfig(
            mode="evolve",
            seed=seed,
            evolve=EvolveConfig(t_final=1.0, observables=["position"], compare_integrators=True),
        ),
        "crosscheck": ScenarioConfig(mode="crosscheck", seed=seed, crosscheck=CrosscheckConfig(n_bumps=5)),
    }


def selftest_workflow(out_dir: str | Path = "output/selftest", seed: int = 0) -> RunManifest:
    """
    Run every reference scenario into its own subdirectory.

    Returns:
        One manifest whose checks are those of all scenarios, prefixed by scenario name
    """
    logger = get_logger()
    logger.info("=" * 60)
    logger.info("STARTING SELFTEST")
    logger.info("=" * 60)

    out_dir = Path(out_dir)
    scenarios = reference_scenarios(seed)
    manifest = RunManifest(
        mode="selftest",
        config_hash=content_hash({name: s.model_dump(mode="json") for name, s in scenarios.items()}),
        tool_version=__version__,
        seed=seed,
        started_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )

    for name, scenario in scenarios.items():
        logger.info(f"--- Scenario {name} ---")
        result = run_scenario(scenario, out_dir / name)
        manifest.outputs += result.outputs
        for key, value in result.metrics.items():
            manifest.metrics[key] = manifest.metrics.get(key, 0) + value
        manifest.checks += [
            CheckResult(name=f"{name}.{c.name}", passed=c.passed, detail=c.detail) for c in result.checks
        ]
        if result.partial:
            manifest.partial = True
            manifest.checks.append(CheckResult(name=f"{name}.completed", passed=False, detail=result.error or ""))

    manifest.finished_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    write_json_file(out_dir / "manifest.json", manifest.model_dump(mode="json"))

    logger.info("=" * 60)
    logger.info(f"SELFTEST {'PASSED' if manifest.passed else 'FAILED'}")
    logger.info("=" * 60)
    return manifest
