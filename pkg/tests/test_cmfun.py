"""Transform catalog: closed forms, integral representations, envelopes."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from bernergy import cmfun
from bernergy.cmfun import (PsiFunction, catalog, change_envelope,
                            eval_by_representation, eval_closed, exp_partial,
                            get_psi, make_pow, omega_trunc)
from bernergy.errors import (DomainError, QuadratureError,
                             RepresentationUnavailableError)


def scaled_tol(value):
    return max(1e-8, 1e-6 * abs(value)) / 2


class TestHelpers:
    def test_omega_order_zero_is_zero(self):
        assert omega_trunc(0, 3.7) == 0.0

    def test_omega_order_two(self):
        s = np.array([0.0, 1.0, 4.0])
        np.testing.assert_allclose(omega_trunc(2, s), 1.0 - s)

    def test_exp_partial_at_zero(self):
        for ell in (1, 2, 3):
            assert exp_partial(ell, 0.0) == 1.0

    def test_exp_partial_order_one(self):
        r = np.linspace(0.1, 20, 40)
        np.testing.assert_allclose(exp_partial(1, r), np.exp(-r))

    def test_exp_partial_huge_argument(self):
        assert exp_partial(3, 1e6) == pytest.approx(0.0, abs=1e-300)


class TestEnvelope:
    def test_large_r(self):
        assert change_envelope(1, 2.0, 0.0) == 1.0

    def test_small_r(self):
        assert change_envelope(1, 0.5, 3.0) == 2.0

    def test_domain(self):
        with pytest.raises(DomainError):
            change_envelope(1, 0.0, 1.0)
        with pytest.raises(DomainError):
            change_envelope(1, 1.0, -1.0)

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_envelope_dominates_integrand(self, ell):
        # Fit the smallest constant M over a wide grid and record it; the
        # ratio must stay finite (bounded), which certifies dominated
        # truncation of the representation integrals.
        r = np.concatenate([np.logspace(-4, 0, 60), np.logspace(0, 4, 60)])
        t = np.concatenate([[0.0], np.logspace(-3, 2, 50)])
        rr, tt = np.meshgrid(r, t)
        numerator = np.abs(np.exp(-rr * tt)
                           - exp_partial(ell, rr) * omega_trunc(ell, rr * tt))
        ratio = numerator / change_envelope(ell, rr, tt)
        fitted_m = float(np.max(ratio))
        assert np.isfinite(fitted_m)
        assert fitted_m <= 10.0  # recorded: ~1.0 for ell in 1..3


class TestClosedForms:
    def test_sqrt(self):
        assert eval_closed(get_psi("sqrt"), 4.0) == 2.0

    def test_pow3(self):
        assert eval_closed(get_psi("pow:3"), 4.0) == 8.0

    def test_log1p_at_zero(self):
        assert eval_closed(get_psi("log1p"), 0.0) == 0.0

    def test_tlog_at_zero(self):
        assert eval_closed(get_psi("tlog:2"), 0.0) == 0.0
        assert eval_closed(get_psi("tlog:3"), 0.0) == 0.0

    def test_tlog_signs(self):
        # CM_ell orientation: +t log t for ell=2, -t^2 log t for ell=3.
        assert eval_closed(get_psi("tlog:2"), math.e) == pytest.approx(math.e)
        assert eval_closed(get_psi("tlog:3"), math.e) == pytest.approx(
            -math.e ** 2)

    def test_pow1_matches_sqrt(self):
        grid = np.logspace(-3, 3, 25)
        np.testing.assert_array_equal(eval_closed(make_pow(1.0), grid),
                                      eval_closed(get_psi("sqrt"), grid))

    def test_negative_domain(self):
        with pytest.raises(DomainError):
            eval_closed(get_psi("sqrt"), -1.0)

    def test_make_pow_rejects_polynomial_exponents(self):
        for a in (0.0, 2.0, 4.0, 6.0, -1.0):
            with pytest.raises(DomainError):
                make_pow(a)

    def test_get_psi_unknown(self):
        with pytest.raises(KeyError):
            get_psi("nope")
        with pytest.raises(KeyError):
            get_psi("pow:abc")


class TestRepresentation:
    @pytest.mark.parametrize("name", ["sqrt", "pow:0.5", "pow:1.5", "pow:3",
                                      "log1p", "linear"])
    def test_matches_closed_form(self, name):
        psi = get_psi(name)
        for t in (1e-3, 1e-1, 1.0, 10.0, 1e3):
            closed = float(eval_closed(psi, t))
            rep = eval_by_representation(psi, t, scaled_tol(closed))
            assert abs(rep - closed) <= max(1e-6 * abs(closed), 1e-8)

    def test_sqrt_constant_from_display(self):
        # The Bernstein integral (1/(2 sqrt(pi))) int (e^{-rt}-1) r^{-3/2} dr
        # equals -sqrt(t); at t = 1 the oriented integral is -1, so the
        # stored function evaluates to +1.
        assert eval_by_representation(get_psi("sqrt"), 1.0, 1e-10) == \
            pytest.approx(1.0, abs=1e-9)

    def test_pow3_constant_from_display(self):
        # For 2 < a < 4: t^{a/2} = a(a-2)/(4 Gamma(2-a/2))
        #   * int (e^{-rt} - 1 + rt) r^{-(a/2+1)} dr, so pow:3 at t=1 is 1.
        assert eval_by_representation(get_psi("pow:3"), 1.0, 1e-10) == \
            pytest.approx(1.0, abs=1e-9)

    def test_t_zero_reduces_to_constant_coefficient(self):
        for name in ("sqrt", "pow:0.5", "pow:3", "log1p"):
            psi = get_psi(name)
            assert eval_by_representation(psi, 0.0, 1e-10) == 0.0
        assert eval_by_representation(get_psi("linear"), 0.0, 1e-10) == 0.0

    def test_linear_exact(self):
        psi = get_psi("linear")
        for t in (0.0, 0.5, 3.0, 100.0):
            assert eval_by_representation(psi, t, 1e-12) == t

    def test_closed_form_only_raises(self):
        for name in ("loglog", "tlog:2", "pow:5", "exp"):
            with pytest.raises(RepresentationUnavailableError):
                eval_by_representation(get_psi(name), 1.0)

    def test_unreachable_tolerance_raises_with_estimate(self):
        psi = get_psi("pow:1.5")
        with pytest.raises(QuadratureError) as err:
            eval_by_representation(psi, 316.0, 1e-15)
        closed = float(eval_closed(psi, 316.0))
        assert err.value.estimate == pytest.approx(closed, rel=1e-8)
        assert err.value.error_bound > 1e-15

    def test_general_branch_with_exponential_weight(self):
        # Synthetic entry exercising the e_ell(r) branch: with density
        # e^{-r}, order 1 and constant part -log 2, the integral
        # int (e^{-tr} - e_1(r)) e^{-r} / r dr collapses by the Frullani
        # identity to log 2 - log(1 + t), so the oriented closed form is
        # log1p again.
        psi = PsiFunction(
            name="log1p_general", ell=1,
            closed_form=lambda t: np.log1p(np.asarray(t, dtype=float)),
            levy_density=lambda r: math.exp(-r) if r < 745.0 else 0.0,
            poly_coeffs=(-math.log(2.0), 0.0), smooth_at_zero=False,
            cm_sign=-1)
        for t in (0.0, 0.3, 1.0, 7.0, 150.0):
            rep = eval_by_representation(psi, t, 1e-10)
            assert rep == pytest.approx(math.log1p(t), abs=1e-9)


class TestCatalogInvariants:
    def test_required_entries_present(self):
        names = {p.name for p in catalog()}
        assert {"sqrt", "pow:0.5", "pow:1.5", "pow:3", "pow:5", "log1p",
                "loglog", "linear", "tlog:2", "tlog:3", "exp"} <= names
        assert get_psi("sqrt").ell == 1

    def test_polynomial_sign_constraint(self):
        for psi in catalog():
            assert (-1) ** psi.ell * psi.poly_coeffs[-1] >= 0

    def test_constant_coefficient_matches_closed_form_at_zero(self):
        for psi in catalog():
            if psi.smooth_at_zero:
                assert float(eval_closed(psi, 0.0)) == pytest.approx(
                    psi.cm_sign * psi.poly_coeffs[0], abs=1e-15)

    def test_density_integrability(self):
        # int min(1, r^-ell) d(density) < infinity, checked numerically.
        for psi in catalog():
            if not psi.has_representation:
                continue
            low, _ = quad(psi.levy_density, 0.0, 1.0)
            high, _ = quad(lambda r, p=psi: p.levy_density(r) * r ** -p.ell,
                           1.0, np.inf)
            assert np.isfinite(low) and np.isfinite(high)

    def test_growth_bound(self):
        grid = np.concatenate([[0.0], np.logspace(-6, 6, 200)])
        for psi in catalog():
            ratio = np.abs(eval_closed(psi, grid)) / (1.0 + grid ** psi.ell)
            assert np.all(np.isfinite(ratio))
            assert float(np.max(ratio)) < 50.0

    def test_bernstein_monotone_concave(self):
        grid = np.linspace(0.0, 40.0, 401)
        for psi in catalog():
            if psi.ell != 1 or psi.cm_sign != -1:
                continue
            if float(eval_closed(psi, 0.0)) != 0.0:
                continue
            values = eval_closed(psi, grid)
            first = np.diff(values)
            assert np.all(first >= -1e-12)
            assert np.all(np.diff(first) <= 1e-12)

    def test_metric_safe_flags(self):
        flags = {p.name: p.metric_safe for p in catalog()}
        assert flags["sqrt"] and flags["log1p"] and flags["loglog"]
        assert flags["pow:0.5"] and flags["pow:1.5"]
        assert not flags["linear"] and not flags["exp"] and not flags["pow:3"]


class TestSignStructure:
    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_truncated_exponential_sign(self, ell):
        # (-1)^ell (e^{-s} - w_ell(s)) >= 0 for all s >= 0.
        s = np.concatenate([[0.0], np.logspace(-4, 3, 300)])
        values = (-1.0) ** ell * (np.exp(-s) - omega_trunc(ell, s))
        assert np.all(values >= -1e-15)
