"""Point spaces, kernels and the arccosh series."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bernergy import spaces
from bernergy.errors import DomainError, NonFiniteError, SpaceMismatchError
from bernergy.spaces import (CndKernel, arccosh_coefficients, arccosh_series,
                             eval_kernel, euclidean, gram, hyperboloid,
                             lorentz_product, pairwise, sphere)

EUC = CndKernel("euclidean_squared")
HYP = CndKernel("hyperbolic")
SPH = CndKernel("sphere_geodesic")


class TestPointConstruction:
    def test_euclidean_basic(self):
        p = euclidean([1.0, 2.0])
        assert p.dim == 2
        assert p.t is None

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteError):
            euclidean([np.nan])
        with pytest.raises(NonFiniteError):
            euclidean([np.inf, 0.0])

    def test_sphere_zero_rejected(self):
        with pytest.raises(DomainError):
            sphere([0.0, 0.0])

    @settings(derandomize=True, max_examples=60)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=6))
    def test_hyperboloid_sheet_invariant(self, coords):
        p = hyperboloid(coords)
        assert abs(p.t ** 2 - float(p.coords @ p.coords) - 1.0) <= 1e-12 * max(
            1.0, p.t ** 2)

    @settings(derandomize=True, max_examples=60)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=6))
    def test_sphere_unit_invariant(self, coords):
        if all(abs(c) < 1e-30 for c in coords):
            return
        p = sphere(coords)
        assert abs(float(p.coords @ p.coords) - 1.0) <= 1e-12


class TestEvalKernel:
    def test_euclidean_unit_distance(self):
        assert eval_kernel(EUC, euclidean([0.0]), euclidean([1.0])) == 1.0

    def test_hyperbolic_same_point(self):
        p = hyperboloid([0.3, -0.2])
        assert eval_kernel(HYP, p, hyperboloid([0.3, -0.2])) == 0.0

    def test_hyperbolic_unit_distance(self):
        x = hyperboloid([math.sinh(1.0)])
        y = hyperboloid([0.0])
        assert eval_kernel(HYP, x, y) == pytest.approx(1.0, abs=1e-12)

    def test_shifted_diagonal(self):
        k = CndKernel("euclidean_squared", shift=2.5)
        p = euclidean([1.0, 1.0])
        assert eval_kernel(k, p, p) == 2.5

    def test_space_mismatch(self):
        with pytest.raises(SpaceMismatchError):
            eval_kernel(EUC, euclidean([0.0]), hyperboloid([0.0]))
        with pytest.raises(SpaceMismatchError):
            eval_kernel(HYP, euclidean([0.0]), euclidean([1.0]))

    def test_bitwise_symmetry(self):
        rng = np.random.default_rng(42)
        for kernel, maker in ((EUC, euclidean), (HYP, hyperboloid), (SPH, sphere)):
            for _ in range(50):
                x = maker(rng.standard_normal(3))
                y = maker(rng.standard_normal(3))
                assert eval_kernel(kernel, x, y) == eval_kernel(kernel, y, x)

    def test_nonnegative(self):
        rng = np.random.default_rng(7)
        for kernel, maker in ((EUC, euclidean), (HYP, hyperboloid), (SPH, sphere)):
            for _ in range(50):
                x = maker(rng.standard_normal(2))
                y = maker(rng.standard_normal(2))
                assert eval_kernel(kernel, x, y) >= 0.0


class TestLorentzProduct:
    def test_apex_self(self):
        p = hyperboloid([0.0])
        assert lorentz_product(p, p) == 1.0

    def test_unit_boost(self):
        x = hyperboloid([math.sinh(1.0)])
        y = hyperboloid([0.0])
        assert lorentz_product(x, y) == pytest.approx(math.cosh(1.0), rel=1e-15)

    def test_opposite_boosts_brute_force(self):
        # t_x t_y - <x, y> evaluated by hand: cosh^2(1) + sinh^2(1) = cosh(2)
        x = hyperboloid([math.sinh(1.0)])
        y = hyperboloid([-math.sinh(1.0)])
        by_hand = x.t * y.t - x.coords[0] * y.coords[0]
        assert lorentz_product(x, y) == by_hand
        assert by_hand == pytest.approx(math.cosh(2.0), rel=1e-15)

    def test_requires_hyperboloid(self):
        with pytest.raises(SpaceMismatchError):
            lorentz_product(euclidean([0.0]), euclidean([0.0]))

    def test_at_least_one(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = hyperboloid(rng.standard_normal(4))
            y = hyperboloid(rng.standard_normal(4))
            assert lorentz_product(x, y) >= 1.0 - 1e-12


class TestArccoshSeries:
    def test_zero_terms_is_log4(self):
        value, _ = arccosh_series(2.0, 0)
        assert value == pytest.approx(math.log(4.0), rel=1e-15)

    def test_first_coefficient_quarter(self):
        assert arccosh_coefficients(1)[0] == pytest.approx(0.25, rel=1e-15)

    def test_second_coefficient(self):
        # (2k)!/(2^{2k}(k!)^2 2k) at k=2: 24 / (16 * 4 * 4) = 3/32
        assert arccosh_coefficients(2)[1] == pytest.approx(3.0 / 32.0, rel=1e-15)

    def test_matches_acosh_within_bound(self):
        value, bound = arccosh_series(2.0, 8)
        assert abs(value - math.acosh(2.0)) <= bound

    def test_monotone_nonincreasing_and_convergent(self):
        for t in (1.2, 2.0, 5.0, 50.0):
            values = [arccosh_series(t, k)[0] for k in range(0, 30)]
            assert all(a >= b for a, b in zip(values, values[1:]))
            # q = t^-2 < 0.7 for t >= 1.2, so 400 terms converge far below
            # the comparison tolerance.
            assert arccosh_series(t, 400)[0] == pytest.approx(math.acosh(t),
                                                              rel=1e-12)

    def test_bound_holds_for_random_arguments(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            t = 1.0 + 10.0 ** rng.uniform(-3, 3)
            for terms in (0, 3, 12):
                value, bound = arccosh_series(t, terms)
                assert abs(value - math.acosh(t)) <= bound

    def test_domain(self):
        with pytest.raises(DomainError):
            arccosh_series(1.0, 4)
        with pytest.raises(DomainError):
            arccosh_series(0.5, 4)


class TestGram:
    def test_two_points(self):
        g = gram(EUC, [euclidean([0.0]), euclidean([1.0])])
        np.testing.assert_array_equal(g.values, [[0.0, 1.0], [1.0, 0.0]])

    def test_single_point_diagonal(self):
        k = CndKernel("euclidean_squared", shift=0.75)
        g = gram(k, [euclidean([3.0])])
        np.testing.assert_array_equal(g.values, [[0.75]])

    def test_three_four_five(self):
        g = gram(EUC, [euclidean([0.0, 0.0]), euclidean([3.0, 4.0])])
        np.testing.assert_array_equal(g.values, [[0.0, 25.0], [25.0, 0.0]])

    def test_mixed_spaces_rejected(self):
        with pytest.raises(SpaceMismatchError):
            gram(EUC, [euclidean([0.0]), hyperboloid([0.0])])
        with pytest.raises(SpaceMismatchError):
            gram(EUC, [euclidean([0.0]), euclidean([0.0, 1.0])])

    def test_exact_symmetry_and_diagonal(self):
        rng = np.random.default_rng(5)
        for kernel, maker, diag in ((EUC, euclidean, 0.0),
                                    (HYP, hyperboloid, 0.0),
                                    (SPH, sphere, 0.0)):
            pts = [maker(rng.standard_normal(3)) for _ in range(12)]
            g = gram(kernel, pts).values
            assert np.array_equal(g, g.T)
            assert np.all(np.diag(g) == diag)

    def test_duplicate_points_give_zero_distance(self):
        p = hyperboloid([0.5, -1.0])
        q = hyperboloid([0.5, -1.0])
        g = pairwise(HYP, [p, q], [p, q])
        assert np.all(g == 0.0)

    def test_provenance_changes_with_points(self):
        a = gram(EUC, [euclidean([0.0]), euclidean([1.0])])
        b = gram(EUC, [euclidean([0.0]), euclidean([2.0])])
        assert a.points_hash != b.points_hash
        assert a.kernel_name == "euclidean_squared"


class TestTriangleInequality:
    """The native metrics satisfy the triangle inequality on random triples."""

    @pytest.mark.parametrize("kernel,maker,take_sqrt", [
        (EUC, euclidean, True),
        (HYP, hyperboloid, False),
        (SPH, sphere, False),
    ])
    def test_random_triples(self, kernel, maker, take_sqrt):
        rng = np.random.default_rng(123)
        pts = [maker(rng.standard_normal(3)) for _ in range(60)]
        table = pairwise(kernel, pts)
        if take_sqrt:
            table = np.sqrt(table)
        idx = rng.integers(0, len(pts), size=(20000, 3))
        lhs = table[idx[:, 0], idx[:, 1]]
        rhs = table[idx[:, 0], idx[:, 2]] + table[idx[:, 2], idx[:, 1]]
        assert float(np.max(lhs - rhs)) <= 1e-12
