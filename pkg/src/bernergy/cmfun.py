"""Bernstein functions and their higher-order completely monotone relatives.

A function psi belongs to the class CM_ell when (-1)^ell psi^(ell) is
completely monotone on (0, oo).  Every such function decomposes as

    psi(t) = integral_(0,oo) (e^{-tr} - e_ell(r) w_ell(rt)) / r^ell dL(r)
             + sum_{k<=ell} b_k t^k                                  (general)

    psi(t) = integral_(0,oo) (e^{-tr} - w_ell(rt)) / r^ell dH(r)
             + sum_{k<=ell} b_k t^k                   (psi in C^{ell-1}[0,oo))

with nonnegative measures L, H on (0, oo) integrating min(1, r^-ell),
sign constraint (-1)^ell b_ell >= 0, and the truncated series

    w_ell(s) = sum_{l<ell} (-1)^l s^l / l!,
    e_ell(s) = e^{-s} sum_{l<ell} s^l / l!.

Bernstein functions are exactly the psi with -psi in CM_1; the catalog
stores those with their conventional positive sign (sqrt, log1p, ...) and
records the orientation in ``cm_sign``.  For ell >= 2 the stored closed
form is the CM_ell element itself, e.g. ``pow:3`` is +t^{3/2} and
``pow:5`` is -t^{5/2}.

``eval_by_representation`` evaluates the stored function through its
integral decomposition (density of L or H against Lebesgue measure, plus
the polynomial part), using adaptive Gauss-Kronrod quadrature split at
r = 1.  ``change_envelope`` provides the dominating envelope

    |e^{-rt} - e_ell(r) w_ell(rt)| <= M * min(r^ell, 1) * (1 + t^ell)

used by tests to certify integrability of the truncated integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.special import xlogy

from .errors import DomainError, QuadratureError, RepresentationUnavailableError

MAX_ORDER = 3

# Beyond this the integrand contribution is far below any supported
# tolerance for every catalog density (see change_envelope domination).
_R_CUTOFF = 1e150


def omega_trunc(ell: int, s):
    """Truncated alternating exponential series sum_{l<ell} (-s)^l / l!."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    term = np.ones_like(s)
    for l in range(ell):
        out = out + term
        term = term * (-s) / (l + 1)
    return out if out.ndim else float(out)


def exp_partial(ell: int, s):
    """Exponentially weighted partial sum e^{-s} sum_{l<ell} s^l / l!."""
    s = np.asarray(s, dtype=float)
    sc = np.minimum(s, 709.0)  # e^{-709} underflows; the true value is ~0 there
    out = np.zeros_like(sc)
    term = np.ones_like(sc)
    for l in range(ell):
        out = out + term
        term = term * sc / (l + 1)
    out = np.exp(-sc) * out
    return out if out.ndim else float(out)


def change_envelope(ell: int, r, t):
    """Dominating envelope min(r^ell, 1) * (1 + t^ell) for the integrand."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(r <= 0):
        raise DomainError("envelope requires r > 0")
    if np.any(t < 0):
        raise DomainError("envelope requires t >= 0")
    out = np.minimum(r, 1.0) ** ell * (1.0 + t ** ell)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PsiFunction:
    """A catalogued CM_ell (or Bernstein) function.

    Fields
    ------
    name : str
        Catalog identifier, e.g. ``"sqrt"`` or ``"pow:3"``.
    ell : int
        Order of the class; Bernstein entries have ell = 1.
    closed_form : callable
        Vectorized evaluator of the stored function on t >= 0.
    levy_density : callable or None
        Density of the representing measure on (0, oo) for the CM_ell
        oriented element ``cm_sign * psi``; None marks closed-form-only
        entries.
    poly_coeffs : tuple
        Polynomial part b_0..b_ell of the CM_ell oriented element, with
        (-1)^ell b_ell >= 0.
    smooth_at_zero : bool
        True when psi is C^{ell-1} on [0, oo); selects the representation
        branch without the e_ell factor.
    cm_sign : int
        +1 if the stored function is itself the CM_ell element, -1 when
        its negative is (the Bernstein convention).
    metric_safe : bool
        ell = 1, psi(0) = 0, psi nondecreasing and sublinear at infinity;
        such psi turn a negative-type metric into another metric.
    is_polynomial : bool
        Degenerate entries (polynomials give the zero form on constrained
        measures).
    """

    name: str
    ell: int
    closed_form: Callable = field(repr=False)
    levy_density: Callable | None = field(repr=False, default=None)
    poly_coeffs: tuple = ()
    smooth_at_zero: bool = True
    cm_sign: int = -1
    metric_safe: bool = False
    is_polynomial: bool = False

    def __post_init__(self):
        if not 0 <= self.ell <= MAX_ORDER:
            raise DomainError(f"order ell={self.ell} outside supported range 0..{MAX_ORDER}")
        if self.cm_sign not in (-1, 1):
            raise DomainError("cm_sign must be +1 or -1")
        if len(self.poly_coeffs) != self.ell + 1:
            raise DomainError("poly_coeffs must have ell + 1 entries")
        if (-1) ** self.ell * self.poly_coeffs[-1] < 0:
            raise DomainError("sign constraint (-1)^ell * b_ell >= 0 violated")

    @property
    def has_representation(self) -> bool:
        return self.levy_density is not None


def eval_closed(psi: PsiFunction, t):
    """Evaluate the stored closed form on t >= 0 (scalar or array)."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise DomainError("psi functions are defined on t >= 0")
    out = psi.closed_form(arr)
    return out if np.ndim(out) else float(out)


def _poly_value(coeffs: tuple, t: float) -> float:
    acc = 0.0
    for k in reversed(range(len(coeffs))):
        acc = acc * t + coeffs[k]
    return acc


def eval_by_representation(psi: PsiFunction, t: float, tol: float = 1e-9) -> float:
    """Evaluate psi(t) through its integral representation.

    The improper integral is split at r = 1.  The lower half runs
    adaptive Gauss-Kronrod quadrature with endpoint-singularity
    extrapolation directly on (0, 1] (QUADPACK QAGS; catalog densities
    may blow up algebraically at 0).  The upper half is mapped by
    r = e^u, which turns the integrable algebraic decays of the catalog
    densities into exponential ones, and handled by QAGI on u in
    [0, oo).  Raises QuadratureError (carrying the best estimate and
    the reported error bound) when the combined error estimate exceeds
    ``tol``.
    """
    if not psi.has_representation:
        raise RepresentationUnavailableError(
            f"{psi.name!r} is catalogued closed-form only")
    if not (t >= 0):
        raise DomainError("psi functions are defined on t >= 0")
    if not (tol > 0):
        raise DomainError("tolerance must be positive")

    ell = psi.ell
    density = psi.levy_density
    smooth = psi.smooth_at_zero

    def integrand(r: float) -> float:
        core = _remainder_over_power(ell, r, t)
        if not smooth:
            core += _one_minus_partial_over_power(ell, r) * float(
                omega_trunc(ell, r * t))
        return core * density(r)

    def upper(u: float) -> float:
        # r beyond e^690 is dominated away for every integrable density.
        if u > 690.0:
            return 0.0
        r = math.exp(u)
        return integrand(r) * r

    # For large t the integrand turns over at r ~ 1/t; give the
    # subdivision a head start there.
    breaks = [1.0 / t] if t > 2.0 else None
    lo, err_lo = _quad_piece(integrand, 0.0, 1.0, tol / 2, points=breaks)
    hi, err_hi = _quad_piece(upper, 0.0, np.inf, tol / 2)
    estimate = psi.cm_sign * (lo + hi + _poly_value(psi.poly_coeffs, t)) + 0.0
    err = err_lo + err_hi
    if err > tol:
        raise QuadratureError(
            f"quadrature for {psi.name!r} at t={t:g} reached error {err:.3e} > tol {tol:.3e}",
            estimate=estimate, error_bound=err)
    return estimate


def _quad_piece(f, a, b, epsabs, points=None):
    value, err, *info = quad(f, a, b, epsabs=epsabs, epsrel=1e-11,
                             limit=400, points=points, full_output=1)
    return value, err


def _remainder_over_power(ell: int, r: float, t: float) -> float:
    """(e^{-rt} - omega_ell(rt)) / r^ell without cancellation or overflow.

    For small s = rt the difference is the alternating exponential tail
    sum_{k>=ell} (-s)^k / k!, evaluated as t^ell times its convergent
    series over s^ell; otherwise the truncated polynomial is expanded so
    that every term carries its own decaying power of r.
    """
    s = r * t
    if s < 0.5:
        term = (-1.0) ** ell / math.factorial(ell)
        acc = 0.0
        for j in range(30):
            acc += term
            term *= -s / (ell + j + 1)
        return t ** ell * acc
    acc = math.exp(-s) * r ** -float(ell) if s < 745.0 else 0.0
    coef = 1.0  # (-t)^l / l!
    for l in range(ell):
        acc -= coef * r ** float(l - ell)
        coef *= -t / (l + 1)
    return acc


def _one_minus_partial_over_power(ell: int, r: float) -> float:
    """(1 - e_ell(r)) / r^ell, stable for small r.

    Uses 1 - e_ell(r) = e^{-r} sum_{k>=ell} r^k / k! (all terms positive)
    below r = 1/2 and the direct expression above.
    """
    if r < 0.5:
        term = 1.0 / math.factorial(ell)
        acc = 0.0
        for k in range(30):
            acc += term
            term *= r / (ell + k + 1)
        return math.exp(-r) * acc
    return (1.0 - float(exp_partial(ell, r))) * r ** -float(ell)


def _pow_closed(s: float, sign: float):
    def closed(t):
        return sign * np.asarray(t, dtype=float) ** s
    return closed


def make_pow(a: float) -> PsiFunction:
    """Distance-power transform psi for the kernel |x-y|^a (psi(t) = t^{a/2}).

    Valid for 0 < a < 6 excluding the even integers (those are polynomial
    cases): a in (0, 2) gives a Bernstein entry, (2, 4) a CM_2 entry
    (stored as +t^{a/2}) and (4, 6) a CM_3 entry (stored as -t^{a/2},
    closed-form only).
    """
    if not (0 < a < 6) or a in (2.0, 4.0):
        raise DomainError(
            "power exponent must be in (0, 6) excluding 2 and 4; "
            "use the 'linear' entry for a = 2")
    s = a / 2.0
    name = f"pow:{a:g}"
    if a < 2:
        c = s / math.gamma(1.0 - s)
        return PsiFunction(
            name=name, ell=1, closed_form=_pow_closed(s, 1.0),
            levy_density=lambda r, c=c, s=s: c * r ** (-s),
            poly_coeffs=(0.0, 0.0), smooth_at_zero=True, cm_sign=-1,
            metric_safe=True)
    if a < 4:
        c = s * (s - 1.0) / math.gamma(2.0 - s)
        return PsiFunction(
            name=name, ell=2, closed_form=_pow_closed(s, 1.0),
            levy_density=lambda r, c=c, s=s: c * r ** (1.0 - s),
            poly_coeffs=(0.0, 0.0, 0.0), smooth_at_zero=True, cm_sign=1)
    return PsiFunction(
        name=name, ell=3, closed_form=_pow_closed(s, -1.0),
        levy_density=None, poly_coeffs=(0.0, 0.0, 0.0, 0.0),
        smooth_at_zero=True, cm_sign=1)


def _sqrt_entry() -> PsiFunction:
    c = 0.5 / math.sqrt(math.pi)
    return PsiFunction(
        name="sqrt", ell=1, closed_form=lambda t: np.sqrt(np.asarray(t, dtype=float)),
        levy_density=lambda r: c * r ** -0.5,
        poly_coeffs=(0.0, 0.0), smooth_at_zero=True, cm_sign=-1, metric_safe=True)


def _log1p_entry() -> PsiFunction:
    return PsiFunction(
        name="log1p", ell=1, closed_form=lambda t: np.log1p(np.asarray(t, dtype=float)),
        levy_density=lambda r: math.exp(-r) if r < 745.0 else 0.0,
        poly_coeffs=(0.0, 0.0), smooth_at_zero=True, cm_sign=-1, metric_safe=True)


def _loglog_entry() -> PsiFunction:
    return PsiFunction(
        name="loglog", ell=1,
        closed_form=lambda t: np.log1p(np.log1p(np.asarray(t, dtype=float))),
        levy_density=None, poly_coeffs=(0.0, 0.0), smooth_at_zero=True,
        cm_sign=-1, metric_safe=True)


def _linear_entry() -> PsiFunction:
    return PsiFunction(
        name="linear", ell=1, closed_form=lambda t: np.asarray(t, dtype=float) + 0.0,
        levy_density=lambda r: 0.0, poly_coeffs=(0.0, -1.0),
        smooth_at_zero=True, cm_sign=-1, is_polynomial=True)


def _tlog_entry(ell: int) -> PsiFunction:
    sign = (-1.0) ** ell

    def closed(t, sign=sign, ell=ell):
        t = np.asarray(t, dtype=float)
        return sign * xlogy(t ** (ell - 1), t)

    return PsiFunction(
        name=f"tlog:{ell}", ell=ell, closed_form=closed, levy_density=None,
        poly_coeffs=(0.0,) * (ell + 1), smooth_at_zero=False, cm_sign=1)


def _exp_entry() -> PsiFunction:
    # Representing measure is a unit point mass at r = 1 (not a Lebesgue
    # density), hence closed-form only; polynomial part is the constant 1.
    return PsiFunction(
        name="exp", ell=1, closed_form=lambda t: np.exp(-np.asarray(t, dtype=float)),
        levy_density=None, poly_coeffs=(1.0, 0.0), smooth_at_zero=True, cm_sign=1)


def catalog() -> list[PsiFunction]:
    """The built-in transform functions."""
    return [
        _sqrt_entry(),
        make_pow(0.5),
        make_pow(1.5),
        make_pow(3.0),
        make_pow(5.0),
        _log1p_entry(),
        _loglog_entry(),
        _linear_entry(),
        _tlog_entry(2),
        _tlog_entry(3),
        _exp_entry(),
    ]


def get_psi(spec: str) -> PsiFunction:
    """Resolve a transform by name; ``pow:<a>`` accepts any valid exponent."""
    for entry in catalog():
        if entry.name == spec:
            return entry
    if spec.startswith("pow:"):
        try:
            a = float(spec.split(":", 1)[1])
        except ValueError:
            raise KeyError(f"malformed power spec: {spec!r}") from None
        return make_pow(a)
    raise KeyError(f"unknown psi function: {spec!r}")
