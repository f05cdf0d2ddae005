import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvlab.jets import (
    Jet,
    JetDomainError,
    JetIndexError,
    JetShapeError,
    coefficient_count,
    jet_constant,
    jet_elementary,
    jet_extract,
    jet_product,
    jet_variable,
)

from oracles import rel_err, richardson_derivative


from curvlab.jets import multi_indices as multis


class TestVariable:
    def test_coordinate_jet_definition(self):
        j = jet_variable(0, 0.0, 2, 4)
        assert j.coefficient((0, 0)) == 0.0
        assert j.coefficient((1, 0)) == 1.0
        nonzero = [m for m in multis(2, 4) if j.coefficient(m) != 0.0]
        assert nonzero == [(1, 0)]

    def test_nonzero_base_point(self):
        j = jet_variable(1, 3.5, 2, 2)
        assert j.coefficient((0, 0)) == 3.5
        assert j.coefficient((0, 1)) == 1.0
        assert sum(abs(c) for c in j.coeffs) == 4.5

    def test_index_out_of_range(self):
        with pytest.raises(JetIndexError):
            jet_variable(2, 1.0, 2, 4)


class TestProduct:
    def test_square_of_coordinate(self):
        x = jet_variable(0, 0.0, 2, 4)
        sq = jet_product(x, x)
        nonzero = {m: sq.coefficient(m) for m in multis(2, 4) if sq.coefficient(m) != 0}
        assert nonzero == {(2, 0): 1.0}

    def test_zero_annihilates(self):
        x = jet_variable(0, 1.3, 2, 3)
        z = jet_constant(0.0, 2, 3)
        assert np.all(jet_product(x, z).coeffs == 0.0)

    def test_shape_mismatch(self):
        with pytest.raises(JetShapeError):
            jet_product(jet_variable(0, 0, 2, 3), jet_variable(0, 0, 2, 4))

    def test_sin_times_cos_against_finite_differences(self):
        # independent oracle: Richardson-extrapolated central differences
        x0 = 0.3
        x = jet_variable(0, x0, 1, 4)
        prod = jet_product(jet_elementary("sin", x), jet_elementary("cos", x))
        f = lambda p: math.sin(p[0]) * math.cos(p[0])
        for k in range(5):
            # h = 0.01 amplifies roundoff by h^-4 at fourth order; 0.1 is safe
            h = 0.01 if k <= 2 else 0.1
            fd = richardson_derivative(f, (x0,), (k,), h=h)
            assert rel_err(jet_extract(prod, (k,)), fd) <= 1e-6

    def test_commutativity_is_bitwise(self):
        rng = np.random.default_rng(7)
        for dim, order in [(1, 4), (2, 3), (3, 4)]:
            n = coefficient_count(dim, order)
            a = Jet(dim, order, rng.standard_normal(n))
            b = Jet(dim, order, rng.standard_normal(n))
            ab = jet_product(a, b).coeffs
            ba = jet_product(b, a).coeffs
            assert np.array_equal(ab, ba)


@st.composite
def integer_jets(draw, dim=2, order=3):
    n = coefficient_count(dim, order)
    vals = draw(st.lists(st.integers(-50, 50), min_size=n, max_size=n))
    return Jet(dim, order, np.array(vals, dtype=float))


class TestRingAxioms:
    # On integer coefficients every float operation below is exact, so the
    # ring axioms can be asserted bitwise.

    @settings(max_examples=60, deadline=None)
    @given(integer_jets(), integer_jets(), integer_jets())
    def test_associativity_exact_on_integers(self, a, b, c):
        left = jet_product(jet_product(a, b), c)
        right = jet_product(a, jet_product(b, c))
        assert np.array_equal(left.coeffs, right.coeffs)

    @settings(max_examples=60, deadline=None)
    @given(integer_jets(), integer_jets(), integer_jets())
    def test_distributivity_exact_on_integers(self, a, b, c):
        left = jet_product(a, b + c)
        right = jet_product(a, b) + jet_product(a, c)
        assert np.array_equal(left.coeffs, right.coeffs)

    @settings(max_examples=60, deadline=None)
    @given(integer_jets(), integer_jets())
    def test_commutativity(self, a, b):
        assert np.array_equal(jet_product(a, b).coeffs, jet_product(b, a).coeffs)


class TestElementary:
    def test_sine_series_at_zero(self):
        s = jet_elementary("sin", jet_variable(0, 0.0, 1, 3))
        assert np.allclose(s.coeffs, [0.0, 1.0, 0.0, -1.0 / 6.0])

    def test_sqrt_of_negative_is_singular(self):
        with pytest.raises(JetDomainError):
            jet_elementary("sqrt", jet_constant(-1.0, 2, 2))

    def test_log_requires_positive(self):
        with pytest.raises(JetDomainError):
            jet_elementary("log", jet_constant(0.0, 1, 2))

    def test_recip_requires_nonzero(self):
        with pytest.raises(JetDomainError):
            jet_elementary("recip", jet_constant(0.0, 1, 2))

    def test_exp_of_sum_mixed_coefficient(self):
        x = jet_variable(0, 0.0, 2, 2)
        y = jet_variable(1, 0.0, 2, 2)
        e = jet_elementary("exp", x + y)
        f = lambda p: math.exp(p[0] + p[1])
        fd = richardson_derivative(f, (0.0, 0.0), (1, 1), h=0.01)
        assert rel_err(e.coefficient((1, 1)), fd) <= 1e-6
        assert abs(e.coefficient((1, 1)) - 1.0) <= 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-5.0, 5.0), st.integers(1, 4))
    def test_log_inverts_exp(self, x0, order):
        a = jet_variable(0, x0, 1, order) * 0.7 + 0.1
        back = jet_elementary("log", jet_elementary("exp", a))
        scale = np.max(np.abs(a.coeffs)) + 1.0
        assert np.max(np.abs(back.coeffs - a.coeffs)) <= 1e-12 * scale

    def test_atan_against_finite_differences(self):
        x0 = 0.7
        a = jet_elementary("atan", jet_variable(0, x0, 1, 4))
        for k in range(5):
            fd = richardson_derivative(lambda p: math.atan(p[0]), (x0,), (k,))
            assert rel_err(jet_extract(a, (k,)), fd) <= 1e-6

    def test_pow_const(self):
        a = jet_variable(0, 2.0, 1, 3)
        p = jet_elementary("pow-const", a, param=1.5)
        for k in range(4):
            fd = richardson_derivative(lambda q: q[0] ** 1.5, (2.0,), (k,))
            assert rel_err(jet_extract(p, (k,)), fd) <= 1e-6


class TestExtract:
    def test_constant(self):
        assert jet_extract(jet_constant(7.0, 1, 2), (0,)) == 7.0

    def test_second_derivative_of_square(self):
        x = jet_variable(0, 0.0, 2, 4)
        assert jet_extract(jet_product(x, x), (2, 0)) == 2.0

    def test_mixed_derivative_of_exp(self):
        e = jet_elementary("exp", jet_variable(0, 0.0, 2, 4) + jet_variable(1, 0.0, 2, 4))
        assert rel_err(jet_extract(e, (1, 1)), 1.0) <= 1e-12

    def test_degree_too_high(self):
        with pytest.raises(JetIndexError):
            jet_extract(jet_constant(1.0, 2, 2), (2, 1))


class TestJetMethods:
    def test_derivative_matches_extract(self):
        x = jet_variable(0, 0.4, 2, 4)
        y = jet_variable(1, -0.2, 2, 4)
        f = jet_elementary("sin", jet_product(x, y))
        fx = f.derivative(0)
        assert abs(fx.value - jet_extract(f, (1, 0))) <= 1e-15
        assert abs(jet_extract(fx, (1, 1)) - jet_extract(f, (2, 1))) <= 1e-12

    def test_truncate_is_prefix(self):
        x = jet_variable(0, 0.4, 2, 4)
        f = jet_elementary("exp", x)
        t = f.truncate(2)
        assert t.order == 2
        assert np.array_equal(t.coeffs, f.coeffs[: coefficient_count(2, 2)])

    def test_division_routes_through_recip(self):
        x = jet_variable(0, 0.5, 1, 4)
        with pytest.raises(JetDomainError):
            x / jet_variable(0, 0.0, 1, 4)
        q = x / (1.0 + x)
        fd = richardson_derivative(lambda p: p[0] / (1 + p[0]), (0.5,), (3,))
        assert rel_err(jet_extract(q, (3,)), fd) <= 1e-6

    def test_integer_power_negative(self):
        x = jet_variable(0, 2.0, 1, 3)
        p = x ** -2
        fd = richardson_derivative(lambda q: q[0] ** -2.0, (2.0,), (2,))
        assert rel_err(jet_extract(p, (2,)), fd) <= 1e-6
