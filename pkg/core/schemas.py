"""Data schemas for certificates, reports and run manifests."""

from fractions import Fraction

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    """One pass/fail entry of a run."""

    name: str
    passed: bool
    detail: str = ""


class OrthogonalityCertificate(BaseModel):
    """Exact inner products of orbit points with one bump, all required to vanish."""

    interval: list[str]
    samples: list[str]
    values: list[str]
    ok: bool


class UnboundednessRow(BaseModel):
    """Resonance time of bump j, its exact expectation, and a nearby zero-expectation time."""

    j: int
    t_j: str
    expectation: str
    witness_zero_t: str
    witness_expectation: str = "0/1"


class UnboundednessCertificate(BaseModel):
    """Table showing the expectation along the orbit is unbounded and discontinuous."""

    n: int
    rows: list[UnboundednessRow]
    increasing_ok: bool
    exceeds_index_ok: bool
    witness_ok: bool

    @property
    def ok(self) -> bool:
        return self.increasing_ok and self.exceeds_index_ok and self.witness_ok


class BoundWitness(BaseModel):
    """A time at which the exact expectation exceeds a prescribed bound."""

    bound: int
    n: int
    j: int
    t: str
    expectation: str
    exceeded: bool


class CounterexampleCertificate(BaseModel):
    """Full exact certificate written by counterexample mode."""

    n: int
    rows: list[UnboundednessRow]
    gram_ok: bool
    hermitean_ok: bool
    moments_ok: bool = True
    orthogonality_ok: bool = True
    phi_tilde_ok: bool = True
    generators_ok: bool = True
    witness_ok: bool = True
    bounds: list[BoundWitness] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.gram_ok
            and self.hermitean_ok
            and self.moments_ok
            and self.orthogonality_ok
            and self.phi_tilde_ok
            and self.generators_ok
            and self.witness_ok
            and all(row_ok(row) for row in self.rows)
            and all(b.exceeded for b in self.bounds)
        )


def row_ok(row: UnboundednessRow) -> bool:
    """Row value must be exactly j + 1, hence above j."""
    return Fraction(row.expectation) == row.j + 1 and Fraction(row.witness_expectation) == 0


class CrosscheckSample(BaseModel):
    """Discrete versus exact expectation at one time."""

    t: str
    t_float: float
    exact: float
    discrete: float
    gap: float
    relative_gap: float | None = None
    gap_over_h2: float
    resonant_bump: int | None = None


class CrosscheckReport(BaseModel):
    """Grid used and one sample row per requested time."""

    spacing: float
    nodes: int
    length: float
    samples: list[CrosscheckSample]

    def max_gap(self, resonant: bool = True) -> float:
        gaps = [s.gap for s in self.samples if (s.resonant_bump is not None) == resonant]
        return max(gaps, default=0.0)


class ObservableSummary(BaseModel):
    """Residual and sup-norm figures for one observable."""

    name: str
    max_residual: float
    max_expectation: float
    min_expectation: float
    sup_a_norm: float
    sup_graph_norm: float
    residual_slope: float | None = None
    sup_norm_change: float | None = None


class EvolveSummary(BaseModel):
    """JSON summary written next to the per-observable CSV files."""

    potential: str
    integrator: str
    nodes: int
    length: float
    dt: float
    save_every: int
    t_final: float
    samples: int
    norm_drift: float
    energy_drift: float
    h_norm_drift: float
    observables: dict[str, ObservableSummary]
    coherent_position_error: float | None = None
    integrator_difference: float | None = None


class RunOutcome(BaseModel):
    """What a runner hands back to the workflow layer."""

    checks: list[CheckResult] = Field(default_factory=list)
    outputs: list[str] = Field(default_factory=list)


class RunManifest(BaseModel):
    """Record of one scenario run: inputs hash, outputs, and every check."""

    mode: str
    config_hash: str
    tool_version: str
    seed: int
    started_at: str
    finished_at: str = ""
    outputs: list[str] = Field(default_factory=list)
    checks: list[CheckResult] = Field(default_factory=list)
    metrics: dict[str, int] = Field(default_factory=dict)
    partial: bool = False
    error: str | None = None

    @property
    def passed(self) -> bool:
        return not self.partial and bool(self.checks) and all(c.passed for c in self.checks)
