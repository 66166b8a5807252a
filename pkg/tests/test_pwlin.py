"""Unit and property tests for exact piecewise-linear algebra."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core import pwlin
from core.counterexample import build_phi_tilde
from core.pwlin import PiecewiseLinear

F = Fraction

# ============================================================================
# Strategies
# ============================================================================

breakpoint_values = st.fractions(min_value=-3, max_value=3, max_denominator=12)
function_values = st.fractions(min_value=-5, max_value=5, max_denominator=8)
shifts = st.fractions(min_value=-4, max_value=4, max_denominator=30)


@st.composite
def pl_functions(draw):
    xs = sorted(draw(st.sets(breakpoint_values, min_size=2, max_size=7)))
    inner = draw(st.lists(function_values, min_size=len(xs) - 2, max_size=len(xs) - 2))
    return PiecewiseLinear(xs, [0, *inner, 0])


property_settings = settings(max_examples=60, deadline=None)


# ============================================================================
# Test Construction
# ============================================================================


class TestConstruction:
    """Test validation and canonical form."""

    def test_rejects_unsorted_breakpoints(self):
        with pytest.raises(ValueError):
            PiecewiseLinear([0, 2, 1], [0, 1, 0])

    def test_rejects_nonzero_ends(self):
        with pytest.raises(ValueError):
            PiecewiseLinear([0, 1, 2], [1, 1, 0])

    def test_rejects_floats(self):
        with pytest.raises(TypeError):
            PiecewiseLinear([0, 0.5, 2], [0, 1, 0])

    def test_collinear_points_are_pruned(self):
        f = PiecewiseLinear([0, F(1, 2), 1, F(3, 2), 2], [0, F(1, 2), 1, F(1, 2), 0])
        assert f == pwlin.tent_psi0()
        assert f.breakpoints == (0, 1, 2)

    def test_zero_runs_at_ends_are_trimmed(self):
        f = PiecewiseLinear([-3, -1, 0, 1, 2, 5], [0, 0, 0, 1, 0, 0])
        assert f.breakpoints == (0, 1, 2)

    def test_canonical_form_keeps_values(self):
        xs = [F(-2), F(-1), F(0), F(1, 3), F(2, 3), F(1), F(3, 2), F(2), F(5, 2), F(3), F(4)]
        ys = [F(0), F(0), F(0), F(1, 3), F(2, 3), F(1), F(1, 4), F(-1, 2), F(-1, 4), F(0), F(0)]
        f = PiecewiseLinear(xs, ys)
        assert len(f.breakpoints) < len(xs)

        def interpolate(x):
            if x <= xs[0] or x >= xs[-1]:
                return F(0)
            k = next(i for i in range(1, len(xs)) if x <= xs[i])
            return ys[k - 1] + (ys[k] - ys[k - 1]) * (x - xs[k - 1]) / (xs[k] - xs[k - 1])

        rng = np.random.default_rng(7)
        for _ in range(100):
            q = int(rng.integers(1, 1001))
            x = F(int(rng.integers(-5 * q, 5 * q + 1)), q)
            assert f(x) == interpolate(x)

    def test_all_zero_is_the_zero_function(self):
        f = PiecewiseLinear([0, 1, 2], [0, 0, 0])
        assert f.is_zero
        assert f == PiecewiseLinear.zero()
        assert f.hull is None

    def test_difference_with_itself_is_zero(self):
        tent = pwlin.tent_psi0()
        assert (tent - tent).is_zero

    @property_settings
    @given(pl_functions())
    def test_canonical_form_is_idempotent(self, f):
        assert PiecewiseLinear(f.breakpoints, f.values) == f

    @property_settings
    @given(pl_functions())
    def test_inserting_a_midpoint_changes_nothing(self, f):
        if f.is_zero:
            return
        xs, ys = list(f.breakpoints), list(f.values)
        mid = (xs[0] + xs[1]) / 2
        refined = PiecewiseLinear([xs[0], mid, *xs[1:]], [ys[0], (ys[0] + ys[1]) / 2, *ys[1:]])
        assert refined == f


# ============================================================================
# Test Evaluation and Translation
# ============================================================================


class TestEvaluation:
    """Test point evaluation, translation and linear combination."""

    def test_tent_values(self):
        tent = pwlin.tent_psi0()
        points = [-1, 0, F(1, 2), 1, F(3, 2), 2, 3]
        assert [tent(x) for x in points] == [0, 0, F(1, 2), 1, F(1, 2), 0, 0]

    def test_translate_shifts_the_graph(self):
        shifted = pwlin.translate(pwlin.tent_psi0(), F(1, 3))
        assert shifted(F(4, 3)) == 1
        assert shifted.hull == (F(1, 3), F(7, 3))

    def test_phi_tilde_peak(self):
        phi_tilde = build_phi_tilde(0, F(1, 8))
        assert pwlin.evaluate(phi_tilde, F(1, 8)) == F(1, 8)

    def test_string_arguments_are_exact(self):
        assert pwlin.tent_psi0()("1/3") == F(1, 3)

    def test_combine_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            pwlin.combine([1, 2], [pwlin.tent_psi0()])

    def test_sample_matches_evaluate(self):
        f = build_phi_tilde(F(1, 4), F(1, 16))
        x = np.linspace(-1, 4, 201)
        expected = np.array([float(f(F(v).limit_denominator(10**9))) for v in x])
        assert np.allclose(pwlin.sample(f, x), expected, atol=1e-9)

    @property_settings
    @given(pl_functions(), shifts, shifts)
    def test_translation_group_law(self, f, a, b):
        assert pwlin.translate(pwlin.translate(f, a), b) == pwlin.translate(f, a + b)
        assert pwlin.translate(f, 0) == f

    @property_settings
    @given(pl_functions(), pl_functions(), function_values, function_values, breakpoint_values)
    def test_combine_is_pointwise(self, f, g, alpha, beta, x):
        h = pwlin.combine([alpha, beta], [f, g])
        assert h(x) == alpha * f(x) + beta * g(x)


# ============================================================================
# Test Integrals
# ============================================================================


class TestIntegrals:
    """Test inner products, moments and support."""

    def test_tent_norm(self):
        tent = pwlin.tent_psi0()
        assert pwlin.inner_product(tent, tent) == F(2, 3)

    def test_phi_tilde_norm(self):
        eta = F(1, 8)
        phi_tilde = build_phi_tilde(0, eta)
        assert pwlin.norm_squared(phi_tilde) == 4 * eta**3

    def test_disjoint_supports_are_orthogonal(self):
        tent = pwlin.tent_psi0()
        assert pwlin.inner_product(tent, pwlin.translate(tent, 2)) == 0

    def test_first_moment_of_tent(self):
        assert pwlin.first_moment(pwlin.tent_psi0(), 0, 2) == 1
        assert pwlin.first_moment(pwlin.tent_psi0(), 0, 1) == F(1, 3)

    def test_first_moment_rejects_empty_interval(self):
        with pytest.raises(ValueError):
            pwlin.first_moment(pwlin.tent_psi0(), 1, 1)

    def test_integral_of_tent(self):
        assert pwlin.integral(pwlin.tent_psi0(), -5, 5) == 1

    def test_support_of_tent(self):
        assert pwlin.support(pwlin.tent_psi0()) == [(0, 2)]

    def test_support_of_phi_tilde(self):
        phi_tilde = build_phi_tilde(0, F(1, 8))
        assert pwlin.support(phi_tilde) == [(0, F(1, 4)), (1, F(5, 4)), (2, F(9, 4))]

    def test_support_of_zero(self):
        assert pwlin.support(PiecewiseLinear.zero()) == []

    @property_settings
    @given(pl_functions(), pl_functions(), shifts)
    def test_translation_is_unitary(self, f, g, t):
        assert pwlin.inner_product(pwlin.translate(f, t), pwlin.translate(g, t)) == pwlin.inner_product(f, g)

    @property_settings
    @given(pl_functions(), pl_functions(), pl_functions(), function_values, function_values)
    def test_inner_product_is_bilinear(self, f, g, h, alpha, beta):
        left = pwlin.inner_product(pwlin.combine([alpha, beta], [f, g]), h)
        assert left == alpha * pwlin.inner_product(f, h) + beta * pwlin.inner_product(g, h)
        assert pwlin.inner_product(f, g) == pwlin.inner_product(g, f)

    @property_settings
    @given(pl_functions(), pl_functions())
    def test_cauchy_schwarz(self, f, g):
        assert pwlin.inner_product(f, g) ** 2 <= pwlin.norm_squared(f) * pwlin.norm_squared(g)

    @property_settings
    @given(pl_functions(), pl_functions())
    def test_simpson_agrees_with_exact(self, f, g):
        exact = float(pwlin.inner_product(f, g))
        assert abs(pwlin.simpson_inner_product(f, g) - exact) <= 1e-12 * (1 + abs(exact))


# ============================================================================
# Test Serialization
# ============================================================================


class TestSerialization:
    """Test the pwlin text format."""

    def test_dumps_layout(self):
        text = pwlin.dumps(pwlin.tent_psi0())
        assert text == "pwlin v1\n3\n0/1 0/1\n1/1 1/1\n2/1 0/1\n"

    @property_settings
    @given(pl_functions())
    def test_loads_inverts_dumps(self, f):
        assert pwlin.loads(pwlin.dumps(f)) == f

    def test_loads_rejects_bad_header(self):
        with pytest.raises(ValueError, match="header"):
            pwlin.loads("pwlin v2\n0\n")

    def test_loads_rejects_wrong_count(self):
        with pytest.raises(ValueError, match="expected 3"):
            pwlin.loads("pwlin v1\n3\n0/1 0/1\n1/1 1/1\n")
