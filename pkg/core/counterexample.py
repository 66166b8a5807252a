"""
Exact construction of a hermitean observable whose expectation along the
translated tent orbit is unbounded and discontinuous.

Each bump j lives on the first three unit translates of a short cell inside an
interval I_j of (0, 1). The bump has vanishing mean and first moment on every
cell, so a translated tent is orthogonal to it unless one of the tent's kinks
falls inside a cell, which happens exactly when t mod 1 lies in I_j.
"""

import math
from collections.abc import Callable, Sequence
from fractions import Fraction

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from core import pwlin
from core.errors import ExactnessError, OverlapError, ResonanceError, SampleRejectedError
from core.logger import get_logger
from core.pwlin import PiecewiseLinear, as_rational
from core.schemas import (
    BoundWitness,
    CounterexampleCertificate,
    OrthogonalityCertificate,
    UnboundednessCertificate,
    UnboundednessRow,
)
from core.utils import format_rational

# Coefficients of phi_j on the tents at t0 + k*eta, k = 0..6
PHI_COEFFICIENTS = (1, -2, -1, 4, -1, -2, 1)
PHI_TILDE_COEFFICIENTS = (1, -2, 1)
RESONANCE_SCAN_STEPS = 23

DEFAULT_T0_OFFSET = Fraction(1, 4)
DEFAULT_ETA_FRACTION = Fraction(1, 16)

IntervalRule = Callable[[int, int], tuple[Fraction, Fraction]]


def fractional_part(t: Fraction) -> Fraction:
    return t - math.floor(t)


class BumpSpec(BaseModel):
    """Open interval I = (left, right) in (0, 1) with the cell start t0 and width parameter eta."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    left: Fraction
    right: Fraction
    t0: Fraction
    eta: Fraction

    @model_validator(mode="after")
    def _check_geometry(self) -> "BumpSpec":
        if not 0 < self.left < self.right < 1:
            raise ValueError(f"interval ({self.left}, {self.right}) must satisfy 0 < left < right < 1")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if not (self.left < self.t0 and self.t0 + 6 * self.eta < self.right):
            raise ValueError("cell [t0, t0 + 6 eta] must lie strictly inside the interval")
        return self

    @property
    def width(self) -> Fraction:
        return self.right - self.left

    @property
    def interval(self) -> tuple[Fraction, Fraction]:
        return self.left, self.right

    def contains(self, t: Fraction) -> bool:
        """True when t mod 1 lies in the open interval."""
        return self.left < fractional_part(as_rational(t)) < self.right

    def cells(self) -> list[tuple[Fraction, Fraction]]:
        return [(self.t0 + k, self.t0 + 6 * self.eta + k) for k in range(3)]


class Bump(BaseModel):
    """One assembled summand a_j |phi_j><phi_j| / |phi_j|^2 of the observable."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    index: int
    spec: BumpSpec
    phi: PiecewiseLinear
    norm_sq: Fraction
    t_j: Fraction
    overlap: Fraction
    a_j: Fraction

    @property
    def peak(self) -> Fraction:
        """This bump's own contribution to the expectation at t_j."""
        return self.a_j * self.overlap**2 / self.norm_sq


class CounterexampleSystem:
    """The assembled bumps together with the rules that produced them."""

    def __init__(
        self,
        bumps: Sequence[Bump],
        interval_rule: IntervalRule,
        t0_offset: Fraction,
        eta_fraction: Fraction,
    ):
        self.bumps = list(bumps)
        self.interval_rule = interval_rule
        self.t0_offset = t0_offset
        self.eta_fraction = eta_fraction

    def __len__(self) -> int:
        return len(self.bumps)

    def bump(self, j: int) -> Bump:
        """Bump by its 1-based index."""
        return self.bumps[j - 1]

    def is_outside(self, t: Fraction | int | str) -> bool:
        """True when t mod 1 avoids every open interval I_j."""
        return not any(b.spec.contains(as_rational(t)) for b in self.bumps)

    def resonant_bump(self, t: Fraction | int | str) -> int | None:
        for b in self.bumps:
            if b.spec.contains(as_rational(t)):
                return b.index
        return None

    def extended(self, n: int) -> "CounterexampleSystem":
        """A system of n bumps built with the same rules."""
        return assemble_system(n, self.interval_rule, t0_offset=self.t0_offset, eta_fraction=self.eta_fraction)

    def denominators(self) -> set[int]:
        found = {1}
        for b in self.bumps:
            found |= pwlin.breakpoint_denominators(b.phi)
            found.add(b.t_j.denominator)
        return found


# ========================================
# Interval rules
# ========================================


def harmonic_intervals(j: int, n: int) -> tuple[Fraction, Fraction]:
    """I_j = (1/(j+2), 1/(j+1)); independent of n."""
    return Fraction(1, j + 2), Fraction(1, j + 1)


def uniform_intervals(j: int, n: int) -> tuple[Fraction, Fraction]:
    """Middle half of the j-th of n equal slices of (0, 1)."""
    w = Fraction(1, n)
    return (j - 1) * w + w / 4, j * w - w / 4


INTERVAL_RULES: dict[str, IntervalRule] = {
    "harmonic": harmonic_intervals,
    "uniform": uniform_intervals,
}


def bump_spec_for(
    left: Fraction,
    right: Fraction,
    t0_offset: Fraction = DEFAULT_T0_OFFSET,
    eta_fraction: Fraction = DEFAULT_ETA_FRACTION,
) -> BumpSpec:
    width = right - left
    return BumpSpec(left=left, right=right, t0=left + width * t0_offset, eta=width * eta_fraction)


# ========================================
# Bump construction
# ========================================


def phi_tilde_generators(t0: Fraction, eta: Fraction) -> list[tuple[int, Fraction]]:
    return [(c, t0 + k * eta) for k, c in enumerate(PHI_TILDE_COEFFICIENTS)]


def phi_generators(t0: Fraction, eta: Fraction) -> list[tuple[int, Fraction]]:
    """(coefficient, time) pairs writing phi_j as a combination of translated tents."""
    return [(c, t0 + k * eta) for k, c in enumerate(PHI_COEFFICIENTS)]


def generators_in_interval(spec: BumpSpec) -> bool:
    """Every orbit time used to write phi_j lies in I_j."""
    return all(spec.left < t < spec.right for _, t in phi_generators(spec.t0, spec.eta))


def from_generators(generators: Sequence[tuple[int, Fraction]]) -> PiecewiseLinear:
    tent = pwlin.tent_psi0()
    return pwlin.combine([c for c, _ in generators], [pwlin.translate(tent, t) for _, t in generators])


def build_phi_tilde(t0: Fraction | int | str, eta: Fraction | int | str) -> PiecewiseLinear:
    """Second difference psi(t0) - 2 psi(t0 + eta) + psi(t0 + 2 eta)."""
    t0, eta = as_rational(t0), as_rational(eta)
    if eta <= 0:
        raise ValueError("eta must be positive")
    return from_generators(phi_tilde_generators(t0, eta))


def build_phi(t0: Fraction | int | str, eta: Fraction | int | str) -> PiecewiseLinear:
    """phi~(.) - 2 phi~(. - 2 eta) + phi~(. - 4 eta); zero mean and first moment per cell."""
    t0, eta = as_rational(t0), as_rational(eta)
    phi_tilde = build_phi_tilde(t0, eta)
    return pwlin.combine(
        [1, -2, 1],
        [phi_tilde, pwlin.translate(phi_tilde, 2 * eta), pwlin.translate(phi_tilde, 4 * eta)],
    )


def default_resonance(spec: BumpSpec, phi: PiecewiseLinear) -> Fraction:
    """t0 + eta, else the first of t0 + k eta / 4 with a nonzero overlap."""
    tent = pwlin.tent_psi0()
    candidates = [spec.t0 + spec.eta]
    candidates += [spec.t0 + k * spec.eta / 4 for k in range(1, RESONANCE_SCAN_STEPS + 1)]
    for t in candidates:
        if pwlin.inner_product(phi, pwlin.translate(tent, t)) != 0:
            return t
    raise ResonanceError(f"no resonance time with nonzero overlap in ({spec.left}, {spec.right})")


def _check_disjoint(intervals: list[tuple[Fraction, Fraction]]) -> None:
    ordered = sorted(enumerate(intervals, start=1), key=lambda item: item[1][0])
    for (i, (_, right)), (j, (left, _)) in zip(ordered, ordered[1:]):
        if left < right:
            raise OverlapError(f"intervals I_{i} and I_{j} overlap")


def assemble_system(
    n: int,
    interval_rule: IntervalRule = harmonic_intervals,
    resonance_rule: Callable[[BumpSpec, PiecewiseLinear], Fraction] = default_resonance,
    t0_offset: Fraction = DEFAULT_T0_OFFSET,
    eta_fraction: Fraction = DEFAULT_ETA_FRACTION,
) -> CounterexampleSystem:
    """Build n bumps with a_j chosen so the expectation at t_j is exactly j + 1."""
    if n < 1:
        raise ValueError("n must be at least 1")

    logger = get_logger()
    intervals = [tuple(as_rational(v) for v in interval_rule(j, n)) for j in range(1, n + 1)]
    _check_disjoint(intervals)

    tent = pwlin.tent_psi0()
    bumps = []
    for j, (left, right) in enumerate(intervals, start=1):
        spec = bump_spec_for(left, right, t0_offset, eta_fraction)
        phi = build_phi(spec.t0, spec.eta)
        norm_sq = pwlin.norm_squared(phi)
        try:
            t_j = resonance_rule(spec, phi)
        except ResonanceError as e:
            raise ResonanceError(f"bump {j}: {e}") from e
        overlap = pwlin.inner_product(phi, pwlin.translate(tent, t_j))
        if overlap == 0:
            raise ResonanceError(f"bump {j}: resonance rule returned a time with zero overlap")

        a_j = (j + 1) * norm_sq / overlap**2
        bumps.append(Bump(index=j, spec=spec, phi=phi, norm_sq=norm_sq, t_j=t_j, overlap=overlap, a_j=a_j))
        logger.increment_metric("bumps_assembled")
        logger.debug(f"bump {j}: I=({left}, {right}) eta={spec.eta} t_j={t_j} a_j={a_j}")

    logger.info(f"Assembled {n} bumps")
    return CounterexampleSystem(bumps, interval_rule, t0_offset, eta_fraction)


# ========================================
# The observable
# ========================================


def apply_A(system: CounterexampleSystem, psi: PiecewiseLinear) -> PiecewiseLinear:
    coefficients, functions = [], []
    for b in system.bumps:
        overlap = pwlin.inner_product(b.phi, psi)
        if overlap != 0:
            coefficients.append(b.a_j * overlap / b.norm_sq)
            functions.append(b.phi)
    if not functions:
        return PiecewiseLinear.zero()
    return pwlin.combine(coefficients, functions)


def expectation_of(system: CounterexampleSystem, psi: PiecewiseLinear) -> Fraction:
    total = Fraction(0)
    for b in system.bumps:
        overlap = pwlin.inner_product(b.phi, psi)
        if overlap != 0:
            total += b.a_j * overlap**2 / b.norm_sq
    return total


def expectation_A(system: CounterexampleSystem, t: Fraction | int | str) -> Fraction:
    """Exact <psi(t), A psi(t)> for the tent translated by t."""
    return expectation_of(system, pwlin.translate(pwlin.tent_psi0(), as_rational(t)))


def gram_matrix(system: CounterexampleSystem) -> list[list[Fraction]]:
    """<phi_i, phi_j>^2 / (|phi_i|^2 |phi_j|^2); the identity for an orthogonal family."""
    size = len(system)
    gram = [[Fraction(0)] * size for _ in range(size)]
    for i, bi in enumerate(system.bumps):
        for j in range(i, size):
            bj = system.bumps[j]
            value = pwlin.inner_product(bi.phi, bj.phi) ** 2 / (bi.norm_sq * bj.norm_sq)
            gram[i][j] = gram[j][i] = value
    return gram


def is_orthonormal(gram: list[list[Fraction]]) -> bool:
    return all(value == (1 if i == j else 0) for i, row in enumerate(gram) for j, value in enumerate(row))


# ========================================
# Checks
# ========================================


def random_rationals(
    rng: np.random.Generator, count: int, span: tuple[int, int] = (-1, 3), max_denominator: int = 1000
) -> list[Fraction]:
    values = []
    for _ in range(count):
        q = int(rng.integers(1, max_denominator + 1))
        p = int(rng.integers(span[0] * q, span[1] * q))
        values.append(Fraction(p, q))
    return values


def random_outside_times(spec: BumpSpec, count: int, rng: np.random.Generator) -> list[Fraction]:
    """Random rationals with denominator at most 1000 whose class mod 1 avoids the interval."""
    found: list[Fraction] = []
    while len(found) < count:
        found += [t for t in random_rationals(rng, count - len(found)) if not spec.contains(t)]
    return found


def verify_orthogonality(
    phi: PiecewiseLinear, spec: BumpSpec, samples: Sequence[Fraction | int | str]
) -> OrthogonalityCertificate:
    """<psi(t), phi> must vanish exactly for every sample outside I + Z."""
    times = [as_rational(t) for t in samples]
    rejected = [t for t in times if spec.contains(t)]
    if rejected:
        shown = ", ".join(str(t) for t in rejected[:5])
        raise SampleRejectedError(f"{len(rejected)} sample(s) lie in I + Z: {shown}", rejected)

    tent = pwlin.tent_psi0()
    values = [pwlin.inner_product(pwlin.translate(tent, t), phi) for t in times]
    nonzero = [(t, v) for t, v in zip(times, values) if v != 0]
    if nonzero:
        t, v = nonzero[0]
        raise ExactnessError(f"<psi({t}), phi> = {v}, expected 0 ({len(nonzero)} nonzero)")

    return OrthogonalityCertificate(
        interval=[format_rational(end) for end in spec.interval],
        samples=[format_rational(t) for t in times],
        values=[format_rational(v) for v in values],
        ok=True,
    )


def check_phi_tilde(spec: BumpSpec, rng: np.random.Generator, count: int = 20) -> bool:
    """Peak eta at t0 + eta, and the cell pattern 1, -2, 1 under unit shifts."""
    phi_tilde = build_phi_tilde(spec.t0, spec.eta)
    if phi_tilde(spec.t0 + spec.eta) != spec.eta:
        return False
    if pwlin.norm_squared(phi_tilde) != 4 * spec.eta**3:
        return False
    cells = [(spec.t0 + k, spec.t0 + k + 2 * spec.eta) for k in range(3)]
    if any(not any(a <= lo and hi <= b for a, b in cells) for lo, hi in pwlin.support(phi_tilde)):
        return False

    for k in rng.integers(1, 128, size=count):
        s = spec.eta * int(k) / 64
        base = spec.eta - abs(s - spec.eta)
        if (phi_tilde(spec.t0 + s), phi_tilde(spec.t0 + 1 + s), phi_tilde(spec.t0 + 2 + s)) != (base, -2 * base, base):
            return False
    return True


def check_moments(bump: Bump) -> bool:
    """Zero mean and zero first moment of phi_j on each of its cells."""
    return all(
        pwlin.integral(bump.phi, a, b) == 0 and pwlin.first_moment(bump.phi, a, b) == 0 for a, b in bump.spec.cells()
    )


def affine_on_cells(spec: BumpSpec, values: Sequence[Fraction]) -> PiecewiseLinear:
    """Compactly supported g taking the six given values at the cell endpoints, affine on every cell."""
    if len(values) != 6:
        raise ValueError("six endpoint values required")
    xs = [spec.t0 - spec.eta]
    for a, b in spec.cells():
        xs += [a, b]
    xs.append(xs[-1] + spec.eta)
    return PiecewiseLinear(xs, [0, *values, 0])


def check_affine_annihilation(bump: Bump, rng: np.random.Generator, count: int = 50) -> bool:
    for _ in range(count):
        values = [Fraction(int(p), int(q)) for p, q in zip(rng.integers(-50, 51, 6), rng.integers(1, 17, 6))]
        if pwlin.inner_product(affine_on_cells(bump.spec, values), bump.phi) != 0:
            return False
    return True


def random_combination(system: CounterexampleSystem, rng: np.random.Generator, terms: int = 3) -> PiecewiseLinear:
    """Finite combination of translated tents, half of them at resonance times."""
    tent = pwlin.tent_psi0()
    coefficients, functions = [], []
    for _ in range(terms):
        if rng.random() < 0.5:
            b = system.bumps[int(rng.integers(len(system)))]
            t = b.t_j + int(rng.integers(-1, 2))
        else:
            t = random_rationals(rng, 1, max_denominator=64)[0]
        coefficients.append(Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 10))))
        functions.append(pwlin.translate(tent, t))
    return pwlin.combine(coefficients, functions)


def check_hermiticity(system: CounterexampleSystem, rng: np.random.Generator, pairs: int = 20) -> bool:
    """<A psi, phi> == <psi, A phi> on random finite combinations."""
    for _ in range(pairs):
        psi = random_combination(system, rng)
        phi = random_combination(system, rng)
        if pwlin.inner_product(apply_A(system, psi), phi) != pwlin.inner_product(psi, apply_A(system, phi)):
            return False
    return True


def witness_zero_time(system: CounterexampleSystem, bump: Bump) -> Fraction:
    """A time within one interval width of t_j at which the expectation is exactly zero."""
    for t in (bump.spec.right, bump.spec.left):
        if system.is_outside(t) and abs(t - bump.t_j) < bump.spec.width and expectation_A(system, t) == 0:
            return t
    raise ExactnessError(f"bump {bump.index}: no zero-expectation witness near t_j")


def unboundedness_certificate(system: CounterexampleSystem) -> UnboundednessCertificate:
    """Exact expectation at every t_j, which must be j + 1, plus a nearby zero."""
    if len(system) < 2:
        raise ValueError("unboundedness needs at least two bumps")

    rows, values = [], []
    witness_ok = True
    for b in system.bumps:
        value = expectation_A(system, b.t_j)
        try:
            witness = witness_zero_time(system, b)
            witness_value = expectation_A(system, witness)
        except ExactnessError:
            witness_ok = False
            witness, witness_value = b.t_j, value
        values.append(value)
        rows.append(
            UnboundednessRow(
                j=b.index,
                t_j=format_rational(b.t_j),
                expectation=format_rational(value),
                witness_zero_t=format_rational(witness),
                witness_expectation=format_rational(witness_value),
            )
        )

    return UnboundednessCertificate(
        n=len(system),
        rows=rows,
        increasing_ok=all(b > a for a, b in zip(values, values[1:])),
        exceeds_index_ok=all(v > b.index for v, b in zip(values, system.bumps)),
        witness_ok=witness_ok,
    )


def exceeding_time(system: CounterexampleSystem, bound: int | Fraction) -> tuple[int, Fraction, Fraction]:
    """First resonance time whose exact expectation is above bound; returns (j, t_j, value)."""
    for b in system.bumps:
        if b.peak > bound:
            value = expectation_A(system, b.t_j)
            if value > bound:
                return b.index, b.t_j, value
    raise ValueError(f"no bump of {len(system)} exceeds {bound}; assemble more than {bound} bumps")


def bound_witness(system: CounterexampleSystem, bound: int) -> BoundWitness:
    """Exhibit a time with expectation above bound, enlarging the system if it is too small."""
    if len(system) <= bound:
        system = system.extended(bound + 1)
    j, t, value = exceeding_time(system, bound)
    return BoundWitness(
        bound=bound, n=len(system), j=j, t=format_rational(t), expectation=format_rational(value), exceeded=value > bound
    )


def certify(
    system: CounterexampleSystem,
    seed: int = 0,
    orthogonality_samples: int = 100,
    hermiticity_pairs: int = 20,
    bounds: Sequence[int] = (),
) -> CounterexampleCertificate:
    """Run every exact check on the system and collect the results."""
    logger = get_logger()
    rng = np.random.default_rng(seed)

    if len(system) >= 2:
        unbounded = unboundedness_certificate(system)
        rows, unbounded_ok = unbounded.rows, unbounded.ok
        logger.info(f"Unboundedness table: {len(rows)} rows, ok={unbounded_ok}")
    else:
        logger.warning("A single bump cannot show unboundedness; only structural checks run")
        rows, unbounded_ok = [], True

    gram_ok = is_orthonormal(gram_matrix(system))
    hermitean_ok = check_hermiticity(system, rng, hermiticity_pairs)
    moments_ok = all(check_moments(b) for b in system.bumps)
    phi_tilde_ok = all(check_phi_tilde(b.spec, rng) for b in system.bumps)
    generators_ok = all(
        b.phi == from_generators(phi_generators(b.spec.t0, b.spec.eta)) and generators_in_interval(b.spec)
        for b in system.bumps
    )
    affine_ok = all(check_affine_annihilation(b, rng) for b in system.bumps)

    orthogonality_ok = True
    for b in system.bumps:
        try:
            verify_orthogonality(b.phi, b.spec, random_outside_times(b.spec, orthogonality_samples, rng))
        except ExactnessError as e:
            logger.error(f"bump {b.index}: {e}")
            orthogonality_ok = False

    witnesses = []
    for bound in bounds:
        witness = bound_witness(system, bound)
        logger.info(f"Bound {bound}: expectation {witness.expectation} at t={witness.t} (n={witness.n})")
        witnesses.append(witness)

    return CounterexampleCertificate(
        n=len(system),
        rows=rows,
        gram_ok=gram_ok,
        hermitean_ok=hermitean_ok,
        moments_ok=moments_ok and affine_ok,
        orthogonality_ok=orthogonality_ok,
        phi_tilde_ok=phi_tilde_ok,
        generators_ok=generators_ok,
        witness_ok=unbounded_ok,
        bounds=witnesses,
    )
