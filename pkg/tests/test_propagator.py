"""Tests for grid observables, integrators, Ehrenfest reports and the cross-check."""

import numpy as np
import pytest
from pydantic import ValidationError

from core.counterexample import assemble_system, witness_zero_time
from core.errors import GridTooCoarseError, GridTooLargeError, HermiticityError, NumericalError
from core.propagator import (
    CrankNicolson,
    Grid,
    GridState,
    Observable,
    Potential,
    SplitFourier,
    aligned_grid,
    coherent_energy,
    coherent_position,
    commutator_form,
    counterexample_crosscheck,
    difference_quotient_terms,
    evolve,
    evolve_and_report,
    expectation,
    gaussian_state,
    hermiticity_defect,
    identity_observable,
    kinetic_observable,
    make_hamiltonian,
    momentum_observable,
    plane_wave_state,
    position_observable,
    projector_observable,
    richardson_slope,
    step_crank_nicolson,
    step_split_fourier,
    time_derivative,
)

# ============================================================================
# Fixtures
# ============================================================================


@pytest.fixture(scope="module")
def grid():
    """Reference grid: 512 nodes on a box of length 40."""
    return Grid(length=40.0, n=512)


@pytest.fixture(scope="module")
def harmonic():
    return Potential(name="harmonic")


@pytest.fixture(scope="module")
def free():
    return Potential(name="free")


@pytest.fixture
def rng():
    return np.random.default_rng(42)


# ============================================================================
# Test Grid and Observables
# ============================================================================


class TestGrid:
    """Test grid validation and states."""

    @pytest.mark.parametrize("n", [8, 100, 513])
    def test_rejects_bad_node_counts(self, n):
        with pytest.raises(ValidationError):
            Grid(length=10.0, n=n)

    def test_nodes_are_centred(self, grid):
        assert grid.nodes[grid.n // 2] == 0.0
        assert np.isclose(grid.nodes[1] - grid.nodes[0], grid.spacing)

    def test_state_size_must_match(self, grid):
        with pytest.raises(ValidationError):
            GridState(grid=grid, amplitudes=np.ones(grid.n - 1))

    def test_gaussian_is_normalised(self, grid):
        assert abs(gaussian_state(grid, x0=1.0, p0=0.5).norm() - 1.0) < 1e-14


class TestObservables:
    """Test the discrete operators."""

    def test_hamiltonian_on_plane_wave(self, grid, free):
        H = make_hamiltonian(grid, free)
        mode = 3
        state = plane_wave_state(grid, mode)
        eigenvalue = 0.5 * (2 * np.pi * mode / grid.length) ** 2
        error = grid.norm(H(state.amplitudes) - eigenvalue * state.amplitudes)
        assert error <= 1e-12 * eigenvalue

    def test_coherent_energy(self, grid, harmonic):
        state = gaussian_state(grid, x0=2.0)
        energy = expectation(state, make_hamiltonian(grid, harmonic))
        assert abs(energy - coherent_energy(2.0, 0.0)) <= 1e-6 * coherent_energy(2.0, 0.0)

    @pytest.mark.parametrize("name", ["position", "momentum", "kinetic", "hamiltonian"])
    def test_hermiticity_defect(self, grid, harmonic, rng, name):
        observables = {
            "position": position_observable(grid),
            "momentum": momentum_observable(grid),
            "kinetic": kinetic_observable(grid),
            "hamiltonian": make_hamiltonian(grid, harmonic),
        }
        assert hermiticity_defect(observables[name], rng, trials=100) <= 1e-12

    def test_non_finite_potential(self, grid):
        values = np.zeros(grid.n)
        values[7] = np.nan
        with pytest.raises(NumericalError):
            make_hamiltonian(grid, values)
        with pytest.raises(NumericalError):
            make_hamiltonian(grid, Potential(name="harmonic", omega=float("inf")))

    def test_projector_is_idempotent(self, grid):
        vector = gaussian_state(grid, x0=-1.0).amplitudes
        P = projector_observable(grid, vector)
        psi = gaussian_state(grid, x0=0.5, p0=1.0).amplitudes
        assert grid.norm(P(P(psi)) - P(psi)) < 1e-14


# ============================================================================
# Test Quadratic Forms
# ============================================================================


class TestQuadraticForms:
    """Test expectation and the commutator form."""

    def test_identity_expectation(self, grid):
        state = gaussian_state(grid, x0=0.3)
        assert abs(expectation(state, identity_observable(grid)) - 1.0) <= 1e-14

    def test_real_gaussian_has_zero_momentum(self, grid):
        state = gaussian_state(grid, x0=1.0)
        assert abs(expectation(state, momentum_observable(grid))) <= 1e-12

    def test_position_expectation(self, grid):
        state = gaussian_state(grid, x0=1.5, p0=-0.5)
        assert abs(expectation(state, position_observable(grid)) - 1.5) <= 1e-10

    def test_non_hermitean_expectation_raises(self, grid):
        skew = Observable("skew", grid, lambda psi: 1j * psi)
        with pytest.raises(HermiticityError):
            expectation(gaussian_state(grid), skew)

    def test_commutator_with_itself_vanishes(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        state = gaussian_state(grid, x0=2.0, p0=0.7)
        assert abs(commutator_form(state, H, H)) <= 1e-12 * max(1.0, expectation(state, H))

    def test_commutator_with_identity_vanishes(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        assert abs(commutator_form(gaussian_state(grid, x0=1.0, p0=1.0), H, identity_observable(grid))) <= 1e-12

    def test_free_position_gives_momentum(self, grid, free):
        state = gaussian_state(grid, p0=1.5)
        value = commutator_form(state, make_hamiltonian(grid, free), position_observable(grid))
        assert abs(value - expectation(state, momentum_observable(grid))) <= 1e-8
        assert abs(value - 1.5) <= 1e-8

    def test_momentum_gives_force(self, grid, harmonic):
        state = gaussian_state(grid, x0=1.2, p0=0.4)
        value = commutator_form(state, make_hamiltonian(grid, harmonic), momentum_observable(grid))
        assert abs(value + expectation(state, position_observable(grid))) <= 1e-6

    def test_swapping_arguments_negates(self, grid, harmonic):
        state = gaussian_state(grid, x0=1.0, p0=0.3)
        H, x = make_hamiltonian(grid, harmonic), position_observable(grid)
        assert abs(commutator_form(state, H, x) + commutator_form(state, x, H)) <= 1e-12


# ============================================================================
# Test Integrators
# ============================================================================


class TestIntegrators:
    """Test single steps and short runs of both integrators."""

    def test_crank_nicolson_small_step_is_near_identity(self, grid, free):
        state = gaussian_state(grid, p0=1.0)
        dt = 1e-6
        later = step_crank_nicolson(state, make_hamiltonian(grid, free), dt)
        assert grid.norm(later.amplitudes - state.amplitudes) <= 10 * dt
        assert later.time == pytest.approx(dt)

    def test_crank_nicolson_plane_wave_phase(self, grid, free):
        mode, dt = 5, 0.01
        state = plane_wave_state(grid, mode)
        energy = 0.5 * (2 * np.pi * mode / grid.length) ** 2
        later = step_crank_nicolson(state, make_hamiltonian(grid, free), dt)
        phase = np.exp(-2j * np.arctan(energy * dt / 2))
        assert grid.norm(later.amplitudes - phase * state.amplitudes) <= 1e-10

    def test_crank_nicolson_preserves_norm(self, grid, harmonic):
        stepper = CrankNicolson(make_hamiltonian(grid, harmonic), 1e-2)
        state = gaussian_state(grid, x0=2.0)
        for _ in range(20):
            state = stepper.step(state)
        assert abs(state.norm() - 1.0) <= 1e-12

    def test_split_fourier_free_plane_wave_is_exact(self, grid, free):
        mode, dt = 4, 0.05
        state = plane_wave_state(grid, mode)
        energy = 0.5 * (2 * np.pi * mode / grid.length) ** 2
        later = step_split_fourier(state, free, dt)
        assert grid.norm(later.amplitudes - np.exp(-1j * energy * dt) * state.amplitudes) <= 1e-12

    def test_split_fourier_is_second_order(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        initial = gaussian_state(grid, x0=2.0, sigma=0.8)
        reference = evolve(initial, H, 1.0, 6.25e-4, integrator="split_fourier")
        errors = [
            grid.norm(evolve(initial, H, 1.0, dt, integrator="split_fourier").amplitudes - reference.amplitudes)
            for dt in (1e-2, 5e-3)
        ]
        # halving dt divides the error by 4, within 20%
        assert 3.2 <= errors[0] / errors[1] <= 4.8

    def test_integrators_agree(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        initial = gaussian_state(grid, x0=2.0)
        cn = evolve(initial, H, 1.0, 1e-3, integrator="crank_nicolson")
        split = evolve(initial, H, 1.0, 1e-3, integrator="split_fourier")
        assert grid.norm(cn.amplitudes - split.amplitudes) <= 1e-4

    def test_rejects_nonpositive_dt(self, grid, harmonic):
        with pytest.raises(ValueError):
            CrankNicolson(make_hamiltonian(grid, harmonic), 0.0)
        with pytest.raises(ValueError):
            SplitFourier(grid, harmonic, -1e-3)


# ============================================================================
# Test Ehrenfest Report
# ============================================================================


class TestTimeDerivative:
    """Test the finite-difference derivative of saved expectations."""

    def test_exact_for_quartics(self):
        t = np.linspace(0, 1, 11)
        derivative = time_derivative(t**4 - 2 * t**3 + t, 0.1)
        assert np.allclose(derivative, 4 * t**3 - 6 * t**2 + 1, atol=1e-10)

    def test_needs_five_samples(self):
        with pytest.raises(ValueError):
            time_derivative(np.zeros(4), 0.1)

    def test_richardson_slope(self):
        assert richardson_slope(4e-6, 1e-6) == pytest.approx(2.0)


class TestEhrenfestReport:
    """Test evolve_and_report."""

    def test_identity_residual(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        report = evolve_and_report(
            gaussian_state(grid, x0=2.0), H, [identity_observable(grid)], t_final=0.5, dt=1e-3, save_every=10
        )
        series = report.series["identity"]
        assert len(report.times) == 51
        assert np.allclose(series.expectation, 1.0, atol=1e-12)
        assert series.max_residual <= 1e-10

    def test_rejects_save_every_not_dividing(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        with pytest.raises(ValueError):
            evolve_and_report(gaussian_state(grid), H, [position_observable(grid)], t_final=0.1, dt=1e-3, save_every=7)

    def test_rejects_too_few_samples(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        with pytest.raises(ValueError):
            evolve_and_report(gaussian_state(grid), H, [position_observable(grid)], t_final=0.03, dt=1e-2)

    def test_wraparound_is_detected(self, grid, free):
        H = make_hamiltonian(grid, free)
        with pytest.raises(NumericalError, match="wraparound"):
            evolve_and_report(gaussian_state(grid, x0=19.0), H, [position_observable(grid)], t_final=0.05, dt=1e-2)

    def test_difference_quotient_split(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        x = position_observable(grid)
        state = gaussian_state(grid, x0=1.5, p0=0.5)
        later = step_crank_nicolson(state, H, 1e-5)
        terms = difference_quotient_terms(state, later, x, H)
        assert abs(terms.quotient - (terms.first + terms.second).real) <= 1e-8
        assert abs(terms.first - terms.first_limit) <= 1e-3
        assert abs(terms.second - terms.second_limit) <= 1e-3

    @pytest.mark.slow
    def test_harmonic_acceptance(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        observables = [position_observable(grid), momentum_observable(grid), H]
        report = evolve_and_report(gaussian_state(grid, x0=2.0), H, observables, t_final=6.4, dt=1e-3, save_every=10)

        assert report.series["position"].max_residual <= 5e-6
        assert report.series["momentum"].max_residual <= 5e-6
        assert report.series["hamiltonian"].max_residual <= 1e-10
        assert report.norm_drift <= 1e-8
        assert report.energy_drift <= 1e-6
        classical = coherent_position(report.times, 2.0, 0.0)
        assert np.max(np.abs(report.series["position"].expectation - classical)) <= 1e-4

    @pytest.mark.slow
    def test_residual_is_second_order(self, grid, harmonic):
        H = make_hamiltonian(grid, harmonic)
        observables = [position_observable(grid), momentum_observable(grid)]
        initial = gaussian_state(grid, x0=2.0)
        coarse = evolve_and_report(initial, H, observables, t_final=3.2, dt=1e-3, save_every=10)
        fine = evolve_and_report(initial, H, observables, t_final=3.2, dt=5e-4, save_every=20)
        for name in ("position", "momentum"):
            assert coarse.series[name].max_residual / fine.series[name].max_residual >= 3.5
            assert richardson_slope(coarse.series[name].max_residual, fine.series[name].max_residual) >= 1.9
            change = abs(coarse.series[name].sup_a_norm - fine.series[name].sup_a_norm)
            assert change <= 0.01 * fine.series[name].sup_a_norm

    @pytest.mark.slow
    def test_quartic_conservation(self, grid):
        H = make_hamiltonian(grid, Potential(name="quartic"))
        report = evolve_and_report(
            gaussian_state(grid, x0=1.0), H, [position_observable(grid), H], t_final=10.0, dt=1e-3, save_every=10
        )
        assert report.norm_drift <= 1e-8
        assert report.energy_drift <= 1e-6
        assert report.series["hamiltonian"].max_residual <= 1e-10

    @pytest.mark.slow
    def test_quartic_sup_norm_is_stable(self, grid):
        H = make_hamiltonian(grid, Potential(name="quartic"))
        observables = [position_observable(grid), momentum_observable(grid)]
        initial = gaussian_state(grid, x0=1.0)
        coarse = evolve_and_report(initial, H, observables, t_final=10.0, dt=1e-3, save_every=10)
        fine = evolve_and_report(initial, H, observables, t_final=10.0, dt=5e-4, save_every=20)
        for name in ("position", "momentum"):
            sup = fine.series[name].sup_a_norm
            assert np.isfinite(sup)
            assert abs(coarse.series[name].sup_a_norm - sup) <= 0.01 * sup


# ============================================================================
# Test Cross-check
# ============================================================================


@pytest.fixture(scope="module")
def crosscheck_system():
    return assemble_system(5)


class TestCrosscheck:
    """Test the discretised counterexample against exact values."""

    def test_aligned_grid(self, crosscheck_system):
        grid = aligned_grid(crosscheck_system)
        assert grid.n == 65536
        assert grid.spacing * 6720 == pytest.approx(1.0)
        assert grid.nodes[0] <= -1 and grid.nodes[-1] >= 4

    def test_resonant_times_agree(self, crosscheck_system):
        times = [b.t_j for b in crosscheck_system.bumps]
        report = counterexample_crosscheck(crosscheck_system, aligned_grid(crosscheck_system), times)
        for sample, bump in zip(report.samples, crosscheck_system.bumps):
            assert sample.resonant_bump == bump.index
            assert sample.exact == bump.index + 1
            assert sample.relative_gap <= 0.05

    def test_outside_times_are_near_zero(self, crosscheck_system):
        times = [witness_zero_time(crosscheck_system, b) for b in crosscheck_system.bumps]
        report = counterexample_crosscheck(crosscheck_system, aligned_grid(crosscheck_system), times)
        assert all(s.exact == 0 and s.discrete <= 1e-6 for s in report.samples)

    def test_refinement_shrinks_gap_fourfold(self, crosscheck_system):
        times = [b.t_j for b in crosscheck_system.bumps]
        coarse = counterexample_crosscheck(crosscheck_system, aligned_grid(crosscheck_system, 1), times)
        fine = counterexample_crosscheck(crosscheck_system, aligned_grid(crosscheck_system, 2), times)
        assert coarse.max_gap() / fine.max_gap() >= 3.5

    def test_too_coarse_grid(self, crosscheck_system):
        with pytest.raises(GridTooCoarseError):
            counterexample_crosscheck(crosscheck_system, Grid(length=10.0, n=1024), [0])

    def test_grid_must_cover_orbit(self, crosscheck_system):
        with pytest.raises(GridTooCoarseError, match="tent orbit"):
            counterexample_crosscheck(crosscheck_system, Grid(length=6.0, n=2**16), [0])

    def test_aligned_grid_grows_with_bumps(self):
        assert aligned_grid(assemble_system(8)).n == 524288

    def test_aligned_grid_over_budget(self):
        with pytest.raises(GridTooLargeError, match="20 bumps"):
            aligned_grid(assemble_system(20))

    def test_explicit_grid_for_many_bumps(self):
        system = assemble_system(12)
        narrowest = min(b.spec.eta for b in system.bumps)
        n = 16
        while 8.5 / n > float(narrowest) / 20:
            n *= 2
        report = counterexample_crosscheck(system, Grid(length=8.5, n=n), [b.t_j for b in system.bumps])
        assert all(s.relative_gap <= 0.05 for s in report.samples)
