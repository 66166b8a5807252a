"""Runner that assembles the exact counterexample and writes its certificate."""

import time
from pathlib import Path

from core import pwlin
from core.config import CounterexampleConfig
from core.counterexample import INTERVAL_RULES, assemble_system, certify
from core.logger import get_logger
from core.schemas import CheckResult, RunOutcome
from core.utils import write_json_file, write_text_file


class CounterexampleRunner:
    """Builds the bumps, certifies every exact identity, and writes the results."""

    def __init__(self, config: CounterexampleConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        self.logger = get_logger()

    def run(self, out_dir: str | Path) -> RunOutcome:
        out_dir = Path(out_dir)
        config = self.config
        self.logger.info(f"Assembling {config.n_bumps} bumps ({config.interval_rule} intervals)")

        started = time.perf_counter()
        system = assemble_system(
            config.n_bumps,
            INTERVAL_RULES[config.interval_rule],
            t0_offset=config.t0,
            eta_fraction=config.eta,
        )
        certificate = certify(
            system,
            seed=self.seed,
            orthogonality_samples=config.orthogonality_samples,
            hermiticity_pairs=config.hermiticity_pairs,
            bounds=config.bounds,
        )
        elapsed = time.perf_counter() - started

        outputs = [str(write_json_file(out_dir / "certificate.json", certificate.model_dump(mode="json")))]
        self.logger.increment_metric("certificates_written")
        if config.write_bumps:
            for bump in system.bumps:
                path = write_text_file(out_dir / "bumps" / f"phi_{bump.index}.pwlin", pwlin.dumps(bump.phi))
                outputs.append(str(path))
            self.logger.increment_metric("artifacts_written", len(system))

        values = ", ".join(row.expectation for row in certificate.rows[:5])
        checks = [
            CheckResult(name="gram_orthonormal", passed=certificate.gram_ok),
            CheckResult(name="hermitean", passed=certificate.hermitean_ok),
            CheckResult(name="zero_moments", passed=certificate.moments_ok),
            CheckResult(name="orthogonality", passed=certificate.orthogonality_ok),
            CheckResult(name="phi_tilde_shape", passed=certificate.phi_tilde_ok),
            CheckResult(name="tent_expansion", passed=certificate.generators_ok),
            CheckResult(name="unbounded_orbit", passed=certificate.witness_ok, detail=f"first values {values}"),
            CheckResult(name="certificate", passed=certificate.ok, detail=f"{elapsed:.2f}s"),
        ]
        checks += [
            CheckResult(name=f"exceeds_{b.bound}", passed=b.exceeded, detail=f"{b.expectation} at t={b.t}")
            for b in certificate.bounds
        ]
        return RunOutcome(checks=checks, outputs=outputs)
