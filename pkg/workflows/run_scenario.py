"""Workflow that runs one scenario and records its manifest."""

from datetime import datetime, timezone
from pathlib import Path

from core import __version__
from core.config import ScenarioConfig
from core.errors import WorkbenchError
from core.logger import get_logger
from core.schemas import RunManifest, RunOutcome
from core.utils import write_json_file
from workflows.run_counterexample import counterexample_workflow
from workflows.run_crosscheck import crosscheck_workflow
from workflows.run_evolve import evolve_workflow

WORKFLOWS = {
    "counterexample": counterexample_workflow,
    "evolve": evolve_workflow,
    "crosscheck": crosscheck_workflow,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_scenario(config: ScenarioConfig, out_dir: str | Path = "output") -> RunManifest:
    """
    Run the mode named by config and write manifest.json into out_dir.

    A failure part-way through still leaves a manifest, flagged partial, with
    whatever outputs were written and the error message.

    Args:
        config: Validated scenario
        out_dir: Directory for every artifact of the run

    Returns:
        RunManifest; manifest.passed decides the exit code
    """
    logger = get_logger()
    out_dir = Path(out_dir)
    manifest = RunManifest(
        mode=config.mode,
        config_hash=config.fingerprint(),
        tool_version=__version__,
        seed=config.seed,
        started_at=_now(),
    )

    logger.reset_metrics()
    interrupted: KeyboardInterrupt | None = None
    try:
        with logger.run_log(out_dir) as log_path:
            outcome: RunOutcome = WORKFLOWS[config.mode](config, out_dir)
        manifest.outputs = [*outcome.outputs, str(log_path)]
        manifest.checks = outcome.checks
    except (WorkbenchError, ValueError, MemoryError) as e:
        logger.error(f"{config.mode} run failed: {e}")
        manifest.partial = True
        manifest.error = f"{type(e).__name__}: {e}"
        manifest.outputs = sorted(str(p) for p in out_dir.rglob("*") if p.is_file())
    except KeyboardInterrupt as e:
        logger.warning(f"{config.mode} run interrupted")
        manifest.partial = True
        manifest.error = "interrupted"
        manifest.outputs = sorted(str(p) for p in out_dir.rglob("*") if p.is_file())
        interrupted = e

    manifest.finished_at = _now()
    for check in manifest.checks:
        logger.increment_metric("checks_passed" if check.passed else "checks_failed")
        logger.info(f"{'PASS' if check.passed else 'FAIL'} {check.name} {check.detail}".rstrip())
    manifest.metrics = logger.get_metrics()

    write_json_file(out_dir / "manifest.json", manifest.model_dump(mode="json"))
    logger.log_metrics()
    if interrupted is not None:
        raise interrupted
    return manifest
