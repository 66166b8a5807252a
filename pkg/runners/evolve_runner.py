"""Runner that propagates a Gaussian and checks the Ehrenfest residuals."""

from pathlib import Path

import numpy as np

from core.config import EvolveConfig
from core.logger import get_logger
from core.propagator import (
    EhrenfestReport,
    Grid,
    Potential,
    coherent_position,
    evolve_and_report,
    gaussian_state,
    make_hamiltonian,
    observable_by_name,
    richardson_slope,
)
from core.schemas import CheckResult, EvolveSummary, ObservableSummary, RunOutcome
from core.utils import write_csv_file, write_json_file

CSV_HEADER = ["t", "expectation", "lhs", "rhs", "residual", "norm", "energy", "sup_A_norm_running"]

# Observables whose expectation is conserved, so the residual only sees rounding
CONSERVED = ("identity", "hamiltonian")


class EvolveRunner:
    """Runs one propagation, plus the optional halved-step and other-integrator companions."""

    def __init__(self, config: EvolveConfig):
        self.config = config
        self.logger = get_logger()
        self.grid = Grid(length=config.length, n=config.nodes)
        self.potential = Potential(
            name=config.potential,
            omega=config.omega,
            coupling=config.coupling,
            height=config.height,
            center=config.center,
            width=config.width,
        )
        self.hamiltonian = make_hamiltonian(self.grid, self.potential)
        self.observables = [observable_by_name(self.grid, name, self.potential) for name in config.observables]

    def propagate(self, dt: float, save_every: int, integrator: str | None = None) -> EhrenfestReport:
        config = self.config
        initial = gaussian_state(self.grid, x0=config.x0, p0=config.p0, sigma=config.sigma)
        return evolve_and_report(
            initial,
            self.hamiltonian,
            self.observables,
            t_final=config.t_final,
            dt=dt,
            save_every=save_every,
            integrator=integrator or config.integrator,
        )

    def run(self, out_dir: str | Path) -> RunOutcome:
        out_dir = Path(out_dir)
        config = self.config
        report = self.propagate(config.dt, config.save_every)

        outputs = []
        for name, series in report.series.items():
            path = write_csv_file(
                out_dir / f"{name}.csv",
                CSV_HEADER,
                [report.times, series.expectation, series.lhs, series.rhs, series.residual,
                 report.norm, report.energy, series.sup_a_norm_running],
            )
            outputs.append(str(path))
        self.logger.increment_metric("artifacts_written", len(report.series))

        summaries = {
            name: ObservableSummary(
                name=name,
                max_residual=series.max_residual,
                max_expectation=float(np.max(series.expectation)),
                min_expectation=float(np.min(series.expectation)),
                sup_a_norm=series.sup_a_norm,
                sup_graph_norm=float(np.max(series.graph_norm)),
            )
            for name, series in report.series.items()
        }

        checks = [
            CheckResult(
                name="norm_conservation",
                passed=report.norm_drift <= config.norm_tolerance,
                detail=f"drift {report.norm_drift:.3e}",
            ),
            CheckResult(
                name="energy_conservation",
                passed=report.energy_drift <= config.energy_tolerance,
                detail=f"relative drift {report.energy_drift:.3e}",
            ),
        ]
        for name, series in report.series.items():
            tolerance = config.conserved_tolerance if name in CONSERVED else config.residual_tolerance
            checks.append(
                CheckResult(
                    name=f"residual_{name}",
                    passed=series.max_residual <= tolerance,
                    detail=f"max {series.max_residual:.3e} (tolerance {tolerance:.1e})",
                )
            )

        coherent_error = self._coherent_error(report)
        if coherent_error is not None:
            checks.append(
                CheckResult(
                    name="coherent_trajectory",
                    passed=coherent_error <= config.coherent_tolerance,
                    detail=f"max |<x> - x_cl| {coherent_error:.3e}",
                )
            )

        if config.convergence_study:
            checks += self._convergence(report, summaries)

        integrator_difference = None
        if config.compare_integrators:
            other = "split_fourier" if config.integrator == "crank_nicolson" else "crank_nicolson"
            companion = self.propagate(config.dt, config.save_every, integrator=other)
            integrator_difference = self.grid.norm(report.final_state.amplitudes - companion.final_state.amplitudes)
            checks.append(
                CheckResult(
                    name="integrator_agreement",
                    passed=integrator_difference <= config.integrator_tolerance,
                    detail=f"L2 difference {integrator_difference:.3e} against {other}",
                )
            )

        summary = EvolveSummary(
            potential=config.potential,
            integrator=config.integrator,
            nodes=self.grid.n,
            length=self.grid.length,
            dt=config.dt,
            save_every=config.save_every,
            t_final=config.t_final,
            samples=len(report.times),
            norm_drift=report.norm_drift,
            energy_drift=report.energy_drift,
            h_norm_drift=report.h_norm_drift,
            observables=summaries,
            coherent_position_error=coherent_error,
            integrator_difference=integrator_difference,
        )
        outputs.append(str(write_json_file(out_dir / "summary.json", summary.model_dump(mode="json"))))
        return RunOutcome(checks=checks, outputs=outputs)

    def _coherent_error(self, report: EhrenfestReport) -> float | None:
        """Distance of <x> from the classical path, for coherent states of the oscillator only."""
        config = self.config
        if config.potential != "harmonic" or "position" not in report.series:
            return None
        if not np.isclose(config.sigma, 1 / np.sqrt(config.omega)):
            return None
        classical = coherent_position(report.times, config.x0, config.p0, config.omega)
        return float(np.max(np.abs(report.series["position"].expectation - classical)))

    def _convergence(self, report: EhrenfestReport, summaries: dict[str, ObservableSummary]) -> list[CheckResult]:
        """Halve dt at the same saved times and compare residuals and sup norms."""
        config = self.config
        self.logger.info(f"Convergence companion at dt={config.dt / 2}")
        fine = self.propagate(config.dt / 2, config.save_every * 2)

        checks = []
        for name, series in report.series.items():
            fine_series = fine.series[name]
            change = abs(series.sup_a_norm - fine_series.sup_a_norm) / (fine_series.sup_a_norm or 1.0)
            summaries[name].sup_norm_change = change
            checks.append(
                CheckResult(
                    name=f"sup_norm_stable_{name}",
                    passed=change <= config.sup_norm_tolerance,
                    detail=f"relative change {change:.3e}",
                )
            )
            if name in CONSERVED:
                continue
            slope = richardson_slope(series.max_residual, fine_series.max_residual)
            summaries[name].residual_slope = slope
            checks.append(
                CheckResult(
                    name=f"residual_order_{name}",
                    passed=slope >= config.min_slope,
                    detail=f"slope {slope:.2f} ({series.max_residual:.3e} -> {fine_series.max_residual:.3e})",
                )
            )
        return checks
