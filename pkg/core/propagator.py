"""
Unitary propagation on a uniform periodic grid and Ehrenfest residual diagnostics.

Units are hbar = m = 1, so H = p^2 / 2 + V(x). Derivatives are spectral. The
discrete inner product is the rectangle rule h * sum(conj(a) * b), which on a
periodic grid is also the trapezoid rule.
"""

import math
from collections.abc import Callable, Sequence
from fractions import Fraction
from functools import cached_property
from typing import Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.sparse.linalg import LinearOperator, gmres

from core import pwlin
from core.counterexample import CounterexampleSystem, expectation_A
from core.errors import (
    GridTooCoarseError,
    GridTooLargeError,
    HermiticityError,
    NumericalError,
    SolverConvergenceError,
)
from core.logger import get_logger
from core.pwlin import as_rational
from core.schemas import CrosscheckReport, CrosscheckSample
from core.utils import format_rational

IMAGINARY_TOLERANCE = 1e-10
SOLVER_RTOL = 1e-14
SOLVER_RESIDUAL_LIMIT = 1e-12
STEP_NORM_LIMIT = 1e-10
BOUNDARY_FRACTION = 0.1
BOUNDARY_MASS_LIMIT = 1e-8
MIN_NODES_PER_CELL = 8
ALIGNED_NODES_PER_ETA = 10
MAX_ALIGNED_NODES = 2**23
MIN_SAVED_SAMPLES = 5

IntegratorName = Literal["crank_nicolson", "split_fourier"]
PotentialName = Literal["free", "harmonic", "quartic", "barrier"]


# ========================================
# Grid and states
# ========================================


class Grid(BaseModel):
    """n equispaced nodes on a box of the given length centred at the origin."""

    model_config = ConfigDict(frozen=True)

    length: float = Field(gt=0)
    n: int

    @field_validator("n")
    @classmethod
    def _power_of_two(cls, n: int) -> int:
        if n < 16 or n & (n - 1):
            raise ValueError(f"node count must be a power of two and at least 16, got {n}")
        return n

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.spacing

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        """h * sum(conj(a) * b); antilinear in the first slot."""
        return complex(self.spacing * np.vdot(a, b))

    def norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(self.spacing * np.sum(np.abs(a) ** 2)))


class GridState(BaseModel):
    """Complex amplitudes on a grid at a given time."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid
    amplitudes: np.ndarray
    time: float = 0.0

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _as_complex(cls, value: np.ndarray) -> np.ndarray:
        array = np.asarray(value, dtype=np.complex128)
        if array.ndim != 1:
            raise ValueError("amplitudes must be one-dimensional")
        return array

    @model_validator(mode="after")
    def _check_size(self) -> "GridState":
        if self.amplitudes.size != self.grid.n:
            raise ValueError(f"{self.amplitudes.size} amplitudes for a grid of {self.grid.n} nodes")
        return self

    def norm(self) -> float:
        return self.grid.norm(self.amplitudes)

    def advanced(self, amplitudes: np.ndarray, dt: float) -> "GridState":
        return GridState(grid=self.grid, amplitudes=amplitudes, time=self.time + dt)


def gaussian_state(grid: Grid, x0: float = 0.0, p0: float = 0.0, sigma: float = 1.0) -> GridState:
    """Normalised Gaussian exp(-(x-x0)^2 / (2 sigma^2) + i p0 x)."""
    x = grid.nodes
    psi = np.exp(-((x - x0) ** 2) / (2 * sigma**2) + 1j * p0 * x)
    return GridState(grid=grid, amplitudes=psi / grid.norm(psi))


def plane_wave_state(grid: Grid, mode: int) -> GridState:
    """exp(2 pi i m x / L), normalised on the box."""
    psi = np.exp(2j * np.pi * mode * grid.nodes / grid.length)
    return GridState(grid=grid, amplitudes=psi / grid.norm(psi))


def coherent_position(t: float | np.ndarray, x0: float, p0: float, omega: float = 1.0) -> float | np.ndarray:
    """Classical trajectory followed by <x> for the harmonic oscillator."""
    return x0 * np.cos(omega * t) + p0 / omega * np.sin(omega * t)


def coherent_energy(x0: float, p0: float, omega: float = 1.0) -> float:
    """Energy of the displaced ground state of V = omega^2 x^2 / 2."""
    return (omega**2 * x0**2 + p0**2) / 2 + omega / 2


# ========================================
# Potentials and observables
# ========================================


class Potential(BaseModel):
    """Named potential with its parameters and exact derivative."""

    model_config = ConfigDict(frozen=True)

    name: PotentialName = "harmonic"
    omega: float = 1.0
    coupling: float = 1.0
    height: float = 1.0
    center: float = 0.0
    width: float = 1.0

    def values(self, x: np.ndarray) -> np.ndarray:
        if self.name == "free":
            return np.zeros_like(x)
        if self.name == "harmonic":
            return 0.5 * self.omega**2 * x**2
        if self.name == "quartic":
            return 0.25 * self.coupling * x**4
        return self.height * np.exp(-((x - self.center) ** 2) / (2 * self.width**2))

    def derivative(self, x: np.ndarray) -> np.ndarray:
        if self.name == "free":
            return np.zeros_like(x)
        if self.name == "harmonic":
            return self.omega**2 * x
        if self.name == "quartic":
            return self.coupling * x**3
        return -(x - self.center) / self.width**2 * self.values(x)


class Observable:
    """A linear map on grid amplitudes; diagonal holds the multiplier if it is one."""

    def __init__(
        self,
        kind: str,
        grid: Grid,
        apply: Callable[[np.ndarray], np.ndarray],
        diagonal: np.ndarray | None = None,
    ):
        self.kind = kind
        self.grid = grid
        self._apply = apply
        self.diagonal = diagonal

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        return self._apply(np.ravel(psi))

    def __repr__(self) -> str:
        return f"Observable({self.kind!r}, n={self.grid.n})"


def multiplication_observable(grid: Grid, values: np.ndarray, kind: str) -> Observable:
    values = np.asarray(values)
    return Observable(kind, grid, lambda psi: values * psi, diagonal=values)


def identity_observable(grid: Grid) -> Observable:
    return multiplication_observable(grid, np.ones(grid.n), "identity")


def position_observable(grid: Grid) -> Observable:
    return multiplication_observable(grid, grid.nodes, "position")


def momentum_observable(grid: Grid) -> Observable:
    """-i d/dx with the unpaired Nyquist mode dropped so the result stays hermitean."""
    k = grid.wavenumbers.copy()
    k[grid.n // 2] = 0.0
    return Observable("momentum", grid, lambda psi: np.fft.ifft(k * np.fft.fft(psi)))


def kinetic_observable(grid: Grid) -> Observable:
    half_k2 = 0.5 * grid.wavenumbers**2
    return Observable("kinetic", grid, lambda psi: np.fft.ifft(half_k2 * np.fft.fft(psi)))


def projector_observable(grid: Grid, vector: np.ndarray) -> Observable:
    """Rank-one orthogonal projector onto the span of vector."""
    v = np.asarray(vector, dtype=np.complex128)
    v = v / grid.norm(v)
    return Observable("projector", grid, lambda psi: v * grid.inner(v, psi))


def potential_values(grid: Grid, potential: Potential | np.ndarray) -> np.ndarray:
    if isinstance(potential, Potential):
        values = potential.values(grid.nodes)
    else:
        values = np.asarray(potential, dtype=float)
    if values.shape != (grid.n,):
        raise ValueError(f"potential has shape {values.shape}, grid has {grid.n} nodes")
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise NumericalError(f"potential is not finite at node {bad} (x={grid.nodes[bad]:.6g})")
    return values


def potential_observable(grid: Grid, potential: Potential | np.ndarray) -> Observable:
    return multiplication_observable(grid, potential_values(grid, potential), "potential")


def make_hamiltonian(grid: Grid, potential: Potential | np.ndarray) -> Observable:
    """Spectral p^2 / 2 plus multiplication by V."""
    v = potential_values(grid, potential)
    half_k2 = 0.5 * grid.wavenumbers**2

    def apply(psi: np.ndarray) -> np.ndarray:
        return np.fft.ifft(half_k2 * np.fft.fft(psi)) + v * psi

    return Observable("hamiltonian", grid, apply, diagonal=v)


def force_observable(grid: Grid, potential: Potential) -> Observable:
    """Multiplication by -V'(x), evaluated analytically."""
    return multiplication_observable(grid, -potential.derivative(grid.nodes), "force")


OBSERVABLE_NAMES = ("identity", "position", "momentum", "kinetic", "potential", "hamiltonian", "force")


def observable_by_name(grid: Grid, name: str, potential: Potential) -> Observable:
    factories: dict[str, Callable[[], Observable]] = {
        "identity": lambda: identity_observable(grid),
        "position": lambda: position_observable(grid),
        "momentum": lambda: momentum_observable(grid),
        "kinetic": lambda: kinetic_observable(grid),
        "potential": lambda: potential_observable(grid, potential),
        "hamiltonian": lambda: make_hamiltonian(grid, potential),
        "force": lambda: force_observable(grid, potential),
    }
    if name not in factories:
        raise ValueError(f"unknown observable '{name}'; choose from {', '.join(OBSERVABLE_NAMES)}")
    return factories[name]()


def hermiticity_defect(A: Observable, rng: np.random.Generator, trials: int = 100) -> float:
    """Largest relative gap between <A xi, zeta> and <xi, A zeta> over random vectors."""
    grid = A.grid
    worst = 0.0
    for _ in range(trials):
        xi = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        zeta = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        a_xi, a_zeta = A(xi), A(zeta)
        scale = grid.norm(a_xi) * grid.norm(zeta) + grid.norm(xi) * grid.norm(a_zeta)
        if scale == 0:
            continue
        worst = max(worst, abs(grid.inner(a_xi, zeta) - grid.inner(xi, a_zeta)) / scale)
    return worst


# ========================================
# Quadratic forms
# ========================================


def _real_part(value: complex, scale: float, what: str) -> float:
    if abs(value.imag) > IMAGINARY_TOLERANCE * max(1.0, scale):
        raise HermiticityError(f"{what} has imaginary part {value.imag:.3e} (scale {scale:.3e})")
    return value.real


def expectation(state: GridState, A: Observable) -> float:
    """<psi, A psi>; raises if the imaginary part is not negligible."""
    grid = state.grid
    psi = state.amplitudes
    a_psi = A(psi)
    return _real_part(grid.inner(psi, a_psi), grid.norm(psi) * grid.norm(a_psi), f"<{A.kind}>")


def _commutator_value(grid: Grid, h_psi: np.ndarray, a_psi: np.ndarray, kind: str) -> float:
    value = 1j * (grid.inner(h_psi, a_psi) - grid.inner(a_psi, h_psi))
    return _real_part(value, 2 * grid.norm(h_psi) * grid.norm(a_psi), f"i<[H, {kind}]>")


def commutator_form(state: GridState, H: Observable, A: Observable) -> float:
    """i(<H psi, A psi> - <A psi, H psi>), the sesquilinear right-hand side."""
    psi = state.amplitudes
    return _commutator_value(state.grid, H(psi), A(psi), A.kind)


class DifferenceQuotient(NamedTuple):
    """Split of the difference quotient of <A> over one step into its two terms."""

    quotient: float
    first: complex
    second: complex
    first_limit: complex
    second_limit: complex


def difference_quotient_terms(state: GridState, later: GridState, A: Observable, H: Observable) -> DifferenceQuotient:
    """
    (<A>(t+h) - <A>(t)) / h = <A psi(t+h), q> + <q, A psi(t)> with q the state
    difference quotient. The terms tend to -i<A psi, H psi> and i<H psi, A psi>.
    """
    grid = state.grid
    h = later.time - state.time
    if h <= 0:
        raise ValueError("later state must be strictly later")

    psi, psi_later = state.amplitudes, later.amplitudes
    q = (psi_later - psi) / h
    a_psi, h_psi = A(psi), H(psi)
    quotient = (expectation(later, A) - expectation(state, A)) / h
    return DifferenceQuotient(
        quotient=quotient,
        first=grid.inner(A(psi_later), q),
        second=grid.inner(q, a_psi),
        first_limit=-1j * grid.inner(a_psi, h_psi),
        second_limit=1j * grid.inner(h_psi, a_psi),
    )


# ========================================
# Integrators
# ========================================


class CrankNicolson:
    """Cayley step (I + i dt H / 2) psi' = (I - i dt H / 2) psi, solved with GMRES."""

    def __init__(self, hamiltonian: Observable, dt: float, restart: int = 30, maxiter: int = 20):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.hamiltonian = hamiltonian
        self.dt = dt
        self.restart = restart
        self.maxiter = maxiter
        self.logger = get_logger()

        n = hamiltonian.grid.n
        half = 0.5j * dt
        self._half = half
        self._lhs = LinearOperator((n, n), matvec=lambda v: np.ravel(v) + half * hamiltonian(v), dtype=np.complex128)

        diagonal = hamiltonian.diagonal if hamiltonian.diagonal is not None else np.zeros(n)
        inverse = 1.0 / (1.0 + half * diagonal)
        self._preconditioner = LinearOperator((n, n), matvec=lambda v: inverse * np.ravel(v), dtype=np.complex128)

    def step(self, state: GridState) -> GridState:
        psi = state.amplitudes
        rhs = psi - self._half * self.hamiltonian(psi)
        rhs_norm = np.linalg.norm(rhs)
        if rhs_norm == 0:
            return state.advanced(np.zeros_like(psi), self.dt)

        iterations = 0

        def count(_residual: float) -> None:
            nonlocal iterations
            iterations += 1

        # explicit Euler predictor psi - i dt H psi
        guess = 2 * rhs - psi
        solution, info = gmres(
            self._lhs,
            rhs,
            x0=guess,
            rtol=SOLVER_RTOL,
            atol=0.0,
            restart=self.restart,
            maxiter=self.maxiter,
            M=self._preconditioner,
            callback=count,
            callback_type="pr_norm",
        )
        self.logger.increment_metric("solver_iterations", iterations)

        residual = np.linalg.norm(rhs - self._lhs.matvec(solution)) / rhs_norm
        if residual > SOLVER_RESIDUAL_LIMIT:
            raise SolverConvergenceError(
                f"GMRES stopped at relative residual {residual:.3e} after {iterations} iterations "
                f"(info={info}, t={state.time:.6g})"
            )

        before, after = state.norm(), state.grid.norm(solution)
        if before > 0 and abs(after - before) / before > STEP_NORM_LIMIT:
            raise NumericalError(f"step changed the norm by {abs(after - before) / before:.3e} at t={state.time:.6g}")
        return state.advanced(solution, self.dt)


class SplitFourier:
    """Strang splitting: half potential kick, exact kinetic drift, half potential kick."""

    def __init__(self, grid: Grid, potential: Potential | np.ndarray, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.dt = dt
        self._half_kick = np.exp(-0.5j * dt * potential_values(grid, potential))
        self._drift = np.exp(-0.5j * dt * grid.wavenumbers**2)

    def step(self, state: GridState) -> GridState:
        psi = self._half_kick * state.amplitudes
        psi = np.fft.ifft(self._drift * np.fft.fft(psi))
        return state.advanced(self._half_kick * psi, self.dt)


def step_crank_nicolson(state: GridState, H: Observable, dt: float) -> GridState:
    return CrankNicolson(H, dt).step(state)


def step_split_fourier(state: GridState, potential: Potential | np.ndarray, dt: float) -> GridState:
    return SplitFourier(state.grid, potential, dt).step(state)


def make_integrator(name: IntegratorName, H: Observable, dt: float) -> CrankNicolson | SplitFourier:
    if name == "crank_nicolson":
        return CrankNicolson(H, dt)
    if name == "split_fourier":
        if H.kind != "hamiltonian" or H.diagonal is None:
            raise ValueError("split_fourier needs a Hamiltonian built by make_hamiltonian")
        return SplitFourier(H.grid, H.diagonal, dt)
    raise ValueError(f"unknown integrator '{name}'")


def evolve(
    initial: GridState, H: Observable, t_final: float, dt: float, integrator: IntegratorName = "crank_nicolson"
) -> GridState:
    """Final state only, no diagnostics."""
    steps = _step_count(t_final, dt)
    stepper = make_integrator(integrator, H, dt)
    state = initial
    for _ in range(steps):
        state = stepper.step(state)
    return state


# ========================================
# Ehrenfest report
# ========================================


def time_derivative(values: np.ndarray, spacing: float) -> np.ndarray:
    """Fourth-order finite differences: centred inside, one-sided at the two ends."""
    f = np.asarray(values, dtype=float)
    if f.size < MIN_SAVED_SAMPLES:
        raise ValueError(f"need at least {MIN_SAVED_SAMPLES} samples, got {f.size}")

    d = np.empty_like(f)
    d[2:-2] = f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]
    d[0] = -25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]
    d[1] = -3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]
    d[-2] = 3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]
    d[-1] = 25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]
    return d / (12 * spacing)


class ObservableSeries(BaseModel):
    """Sampled <A>, its derivative, the commutator form, and norm tracking."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    expectation: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray
    a_norm: np.ndarray
    sup_a_norm_running: np.ndarray
    graph_norm: np.ndarray

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def sup_a_norm(self) -> float:
        return float(self.sup_a_norm_running[-1])


class EhrenfestReport(BaseModel):
    """Everything recorded by evolve_and_report."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    integrator: str
    dt: float
    save_every: int
    times: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    h_norm: np.ndarray
    series: dict[str, ObservableSeries]
    final_state: GridState

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - self.norm[0])))

    @property
    def energy_drift(self) -> float:
        reference = abs(self.energy[0]) or 1.0
        return float(np.max(np.abs(self.energy - self.energy[0])) / reference)

    @property
    def h_norm_drift(self) -> float:
        reference = self.h_norm[0] or 1.0
        return float(np.max(np.abs(self.h_norm - self.h_norm[0])) / reference)


def boundary_mass(state: GridState, fraction: float = BOUNDARY_FRACTION) -> float:
    """Share of the probability in the outer fraction of the box, split between both ends."""
    grid = state.grid
    outer = np.abs(grid.nodes) >= (0.5 - fraction / 2) * grid.length
    density = np.abs(state.amplitudes) ** 2
    total = float(np.sum(density))
    return float(np.sum(density[outer])) / total if total > 0 else 0.0


def _step_count(t_final: float, dt: float) -> int:
    if t_final <= 0 or dt <= 0:
        raise ValueError("t_final and dt must be positive")
    steps = round(t_final / dt)
    if steps < 1 or abs(steps * dt - t_final) > 1e-9 * t_final:
        raise ValueError(f"t_final={t_final} is not a whole number of steps of dt={dt}")
    return steps


def evolve_and_report(
    initial: GridState,
    H: Observable,
    observables: Sequence[Observable],
    t_final: float,
    dt: float,
    save_every: int = 1,
    integrator: IntegratorName = "crank_nicolson",
    boundary_limit: float = BOUNDARY_MASS_LIMIT,
) -> EhrenfestReport:
    """
    Propagate and compare d<A>/dt, taken by finite differences of the saved
    expectations, with the commutator form at every saved time.
    """
    logger = get_logger()
    steps = _step_count(t_final, dt)
    if save_every < 1 or steps % save_every:
        raise ValueError(f"save_every={save_every} must divide the {steps} steps")
    if steps // save_every + 1 < MIN_SAVED_SAMPLES:
        raise ValueError(f"run saves fewer than {MIN_SAVED_SAMPLES} samples")
    names = [A.kind for A in observables]
    if len(set(names)) != len(names):
        raise ValueError(f"observables must be distinct, got {names}")

    grid = initial.grid
    stepper = make_integrator(integrator, H, dt)
    logger.info(f"Evolving {steps} steps of dt={dt} with {integrator} on n={grid.n}, L={grid.length}")

    times, norms, energies, h_norms = [], [], [], []
    records: dict[str, dict[str, list[float]]] = {name: {"exp": [], "rhs": [], "a_norm": []} for name in names}

    def record(state: GridState) -> None:
        psi = state.amplitudes
        if not np.all(np.isfinite(psi)):
            raise NumericalError(f"non-finite amplitudes at t={state.time:.6g}")
        mass = boundary_mass(state)
        if mass > boundary_limit:
            raise NumericalError(f"wraparound: {mass:.3e} of the probability is near the box edge at t={state.time:.6g}")

        h_psi = H(psi)
        psi_norm, h_norm = grid.norm(psi), grid.norm(h_psi)
        times.append(state.time)
        norms.append(psi_norm)
        h_norms.append(h_norm)
        energies.append(_real_part(grid.inner(psi, h_psi), psi_norm * h_norm, "<H>"))
        for A, name in zip(observables, names):
            a_psi = A(psi)
            a_norm = grid.norm(a_psi)
            records[name]["exp"].append(_real_part(grid.inner(psi, a_psi), psi_norm * a_norm, f"<{name}>"))
            records[name]["rhs"].append(_commutator_value(grid, h_psi, a_psi, name))
            records[name]["a_norm"].append(a_norm)

    state = initial
    record(state)
    for k in range(1, steps + 1):
        state = stepper.step(state)
        if k % save_every == 0:
            record(state)
    logger.increment_metric("steps_taken", steps)

    norm_array = np.array(norms)
    h_norm_array = np.array(h_norms)
    series = {}
    for name in names:
        values = np.array(records[name]["exp"])
        rhs = np.array(records[name]["rhs"])
        lhs = time_derivative(values, save_every * dt)
        a_norm = np.array(records[name]["a_norm"])
        series[name] = ObservableSeries(
            name=name,
            expectation=values,
            lhs=lhs,
            rhs=rhs,
            residual=lhs - rhs,
            a_norm=a_norm,
            sup_a_norm_running=np.maximum.accumulate(a_norm),
            graph_norm=norm_array + a_norm + h_norm_array,
        )
        logger.debug(f"{name}: max residual {series[name].max_residual:.3e}")

    return EhrenfestReport(
        integrator=integrator,
        dt=dt,
        save_every=save_every,
        times=np.array(times),
        norm=norm_array,
        energy=np.array(energies),
        h_norm=h_norm_array,
        series=series,
        final_state=state,
    )


def richardson_slope(coarse_error: float, fine_error: float, ratio: float = 2.0) -> float:
    """Observed order from errors at step sizes differing by ratio."""
    if coarse_error <= 0 or fine_error <= 0:
        return math.inf
    return math.log(coarse_error / fine_error) / math.log(ratio)


# ========================================
# Cross-check against the exact system
# ========================================


def aligned_grid(system: CounterexampleSystem, refinement: int = 1, half_width: float = 4.25) -> Grid:
    """
    Grid whose spacing divides every breakpoint of the system, with at least
    ten nodes per eta of the narrowest bump before refinement, covering
    [-half_width, half_width] or more.

    The common denominator grows quickly with the bump count; past
    MAX_ALIGNED_NODES this raises GridTooLargeError instead of allocating.
    """
    if refinement < 1:
        raise ValueError("refinement must be at least 1")
    q = math.lcm(*system.denominators())
    eta_min = min(b.spec.eta for b in system.bumps)
    base = math.ceil(ALIGNED_NODES_PER_ETA / (eta_min * q))
    spacing = Fraction(1, q * base * refinement)
    n = 16
    while n * spacing < 2 * half_width:
        n *= 2
    if n > MAX_ALIGNED_NODES:
        raise GridTooLargeError(
            f"aligned grid for {len(system)} bumps needs {n} nodes (spacing 1/{spacing.denominator}), "
            f"over the budget of {MAX_ALIGNED_NODES}; use fewer bumps or give length and nodes explicitly"
        )
    return Grid(length=float(n * spacing), n=n)


def _check_resolution(system: CounterexampleSystem, grid: Grid) -> None:
    first, last = -grid.length / 2, grid.length / 2 - grid.spacing
    if first > -1 or last < 4:
        raise GridTooCoarseError(f"grid [{first:.3g}, {last:.3g}] must cover the tent orbit [-1, 4]")
    for b in system.bumps:
        across = float(6 * b.spec.eta) / grid.spacing
        if across < MIN_NODES_PER_CELL:
            raise GridTooCoarseError(
                f"grid too coarse: bump {b.index} cell spans {across:.1f} nodes, need {MIN_NODES_PER_CELL}"
            )


class _SampledBump(NamedTuple):
    weight: float
    norm_sq: float
    pieces: list[tuple[slice, np.ndarray]]


def _sample_on_support(f: pwlin.PiecewiseLinear, x: np.ndarray) -> list[tuple[slice, np.ndarray]]:
    """Samples of f on the nodes of each support interval; f vanishes at every other node."""
    pieces = []
    for lo, hi in pwlin.support(f):
        window = slice(int(np.searchsorted(x, float(lo), "left")), int(np.searchsorted(x, float(hi), "right")))
        pieces.append((window, pwlin.sample(f, x[window])))
    return pieces


def counterexample_crosscheck(
    system: CounterexampleSystem, grid: Grid, times: Sequence[Fraction | int | str]
) -> CrosscheckReport:
    """Discretised expectation of the exact observable next to the exact rational value."""
    _check_resolution(system, grid)
    logger = get_logger()
    x = grid.nodes
    h = grid.spacing

    bumps = []
    for b in system.bumps:
        pieces = _sample_on_support(b.phi, x)
        norm_sq = h * sum(float(np.dot(values, values)) for _, values in pieces)
        bumps.append(_SampledBump(float(b.a_j), norm_sq, pieces))
    tent = pwlin.tent_psi0()

    samples = []
    for t in times:
        t = as_rational(t)
        psi = pwlin.translate(tent, t)
        discrete = 0.0
        for bump in bumps:
            overlap = h * sum(float(np.dot(values, pwlin.sample(psi, x[window]))) for window, values in bump.pieces)
            discrete += bump.weight * overlap**2 / bump.norm_sq
        exact = float(expectation_A(system, t))
        gap = abs(discrete - exact)
        samples.append(
            CrosscheckSample(
                t=format_rational(t),
                t_float=float(t),
                exact=exact,
                discrete=discrete,
                gap=gap,
                relative_gap=gap / abs(exact) if exact else None,
                gap_over_h2=gap / h**2,
                resonant_bump=system.resonant_bump(t),
            )
        )
    logger.info(f"Cross-checked {len(samples)} times on n={grid.n}, h={h:.3e}")
    return CrosscheckReport(spacing=h, nodes=grid.n, length=grid.length, samples=samples)
