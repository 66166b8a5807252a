"""Runner that discretises the exact observable and compares it with the rational values."""

from fractions import Fraction
from pathlib import Path

from core.config import CrosscheckConfig
from core.counterexample import INTERVAL_RULES, assemble_system, witness_zero_time
from core.logger import get_logger
from core.propagator import Grid, aligned_grid, counterexample_crosscheck
from core.schemas import CheckResult, CrosscheckReport, RunOutcome
from core.utils import parse_rational, write_json_file


class CrosscheckRunner:
    """Exact against discrete expectation on a grid, with an optional refinement companion."""

    def __init__(self, config: CrosscheckConfig):
        self.config = config
        self.logger = get_logger()
        self.system = assemble_system(config.n_bumps, INTERVAL_RULES[config.interval_rule])

    def grid(self, refinement: int) -> Grid:
        config = self.config
        if config.nodes is not None and config.length is not None:
            return Grid(length=config.length, n=config.nodes * refinement)
        return aligned_grid(self.system, refinement)

    def times(self) -> list[Fraction]:
        """Configured times, or every resonance time and its zero witness."""
        if self.config.times:
            return [parse_rational(t) for t in self.config.times]
        times = []
        for bump in self.system.bumps:
            times += [bump.t_j, witness_zero_time(self.system, bump)]
        return times

    def run(self, out_dir: str | Path) -> RunOutcome:
        config = self.config
        times = self.times()
        report = counterexample_crosscheck(self.system, self.grid(config.refinement), times)
        payload: dict = {"coarse": report.model_dump(mode="json")}
        checks = self._sample_checks(report)

        if config.refinement_study:
            refined = counterexample_crosscheck(self.system, self.grid(2 * config.refinement), times)
            payload["refined"] = refined.model_dump(mode="json")
            ratio = report.max_gap() / refined.max_gap() if refined.max_gap() > 0 else float("inf")
            payload["refinement_ratio"] = ratio
            checks.append(
                CheckResult(
                    name="refinement_ratio",
                    passed=ratio >= config.min_refinement_ratio,
                    detail=f"gap shrinks by {ratio:.2f} when h is halved",
                )
            )

        path = write_json_file(Path(out_dir) / "crosscheck.json", payload)
        self.logger.increment_metric("artifacts_written")
        return RunOutcome(checks=checks, outputs=[str(path)])

    def _sample_checks(self, report: CrosscheckReport) -> list[CheckResult]:
        config = self.config
        resonant = [s for s in report.samples if s.resonant_bump is not None]
        quiet = [s for s in report.samples if s.resonant_bump is None]
        checks = []
        if resonant:
            worst = max(s.relative_gap or 0.0 for s in resonant)
            checks.append(
                CheckResult(
                    name="resonant_agreement",
                    passed=worst <= config.relative_tolerance,
                    detail=f"worst relative gap {worst:.3e} over {len(resonant)} times",
                )
            )
        if quiet:
            worst = max(s.discrete for s in quiet)
            checks.append(
                CheckResult(
                    name="outside_near_zero",
                    passed=worst <= config.zero_tolerance,
                    detail=f"largest discrete value {worst:.3e} over {len(quiet)} times",
                )
            )
        return checks
