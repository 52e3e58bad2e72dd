"""Discrete signed measures and the kernel energy forms built on them.

The central object is the bilinear form

    I(mu, nu) = cm_sign * sum_i sum_j w^mu_i w^nu_j psi(gamma(x_i, y_j)),

where gamma is a conditionally negative definite kernel and psi a catalog
transform.  With the catalog's orientation convention this is a
semi-inner product on the measures satisfying the moment constraints of
order psi.ell:

* ell = 1 (Bernstein psi): total mass zero.  The form is
  -sum sum w w psi(gamma), the classical generalized energy.
* ell >= 2: mass zero plus vanishing double integrals of the centered
  kernel powers K_{-gamma}^j, j < ell.  For the squared Euclidean kernel
  centered at the origin these reduce to vanishing mean (j = 1) and
  vanishing second-moment tensor (j = 2).

The centering transform uses a Lagrange basis (p_1..p_m, xi_1..xi_m with
p_i(xi_j) = delta_ij):

    K_{-g}(x, y) = -g(x, y) + sum_k p_k(x) g(xi_k, y)
                   + sum_l p_l(y) g(x, xi_l)
                   - sum_kl p_k(x) p_l(y) g(xi_k, xi_l).

All double sums are evaluated as quadratic forms with a fixed summation
order, so results are deterministic across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations_with_replacement
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from . import spaces
from .cmfun import PsiFunction, eval_closed
from .errors import (BasisError, ConstraintError, DomainError, NonFiniteError,
                     SpaceMismatchError)
from .spaces import (EUCLIDEAN, EUCLIDEAN_SQUARED, HYPERBOLOID, SPHERE,
                     CndKernel, Point, pairwise)

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class DiscreteSignedMeasure:
    """A finitely supported signed measure: weighted atoms in one space.

    Duplicate atoms are allowed and kept as given (summation is linear, so
    they behave as if coalesced).
    """

    atoms: tuple[Point, ...]
    weights: np.ndarray

    def __post_init__(self):
        atoms = tuple(self.atoms)
        w = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if len(atoms) != w.size:
            raise DomainError("atom and weight counts differ")
        if not np.all(np.isfinite(w)):
            raise NonFiniteError("non-finite weight")
        if atoms:
            space, dim = atoms[0].space, atoms[0].dim
            for p in atoms:
                if p.space != space or p.dim != dim:
                    raise SpaceMismatchError("atoms live in different spaces")
        w.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_arrays(cls, space: str, coords: np.ndarray,
                    weights) -> "DiscreteSignedMeasure":
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        pts = tuple(Point(space, row) for row in coords)
        return cls(pts, np.asarray(weights, dtype=float))

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def space(self) -> str | None:
        return self.atoms[0].space if self.atoms else None

    @property
    def dim(self) -> int | None:
        return self.atoms[0].dim if self.atoms else None

    @cached_property
    def coords(self) -> np.ndarray:
        if not self.atoms:
            return np.zeros((0, 0))
        X = np.array([p.coords for p in self.atoms], dtype=float)
        X.setflags(write=False)
        return X

    @cached_property
    def times(self) -> np.ndarray | None:
        if self.space != HYPERBOLOID:
            return None
        tv = np.array([p.t for p in self.atoms], dtype=float)
        tv.setflags(write=False)
        return tv

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    @property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def mean_vector(self) -> np.ndarray:
        """Vector mean sum_i w_i x_i (Euclidean measures only)."""
        if self.space not in (None, EUCLIDEAN):
            raise SpaceMismatchError("vector mean requires a Euclidean measure")
        if not self.atoms:
            return np.zeros(0)
        return np.einsum("i,ij->j", self.weights, self.coords)

    def scaled(self, factor: float) -> "DiscreteSignedMeasure":
        return DiscreteSignedMeasure(self.atoms, factor * self.weights)


def dirac(point: Point, weight: float = 1.0) -> DiscreteSignedMeasure:
    return DiscreteSignedMeasure((point,), np.array([weight]))


def difference(p: DiscreteSignedMeasure,
               q: DiscreteSignedMeasure) -> DiscreteSignedMeasure:
    """The signed measure p - q (atoms concatenated, q weights negated)."""
    if p.atoms and q.atoms and (p.space != q.space or p.dim != q.dim):
        raise SpaceMismatchError("measures live in different spaces")
    return DiscreteSignedMeasure(p.atoms + q.atoms,
                                 np.concatenate([p.weights, -q.weights]))


def _require_space(measure: DiscreteSignedMeasure, kernel: CndKernel) -> None:
    if measure.atoms and measure.space != kernel.space:
        raise SpaceMismatchError(
            f"kernel {kernel.name!r} expects {kernel.space!r} measures")


def _require_balanced(measure: DiscreteSignedMeasure, tol: float,
                      who: str) -> None:
    thresh = tol * max(1.0, measure.total_variation)
    if abs(measure.mass) > thresh:
        raise ConstraintError(
            f"{who} must have total mass zero: |mass| = {abs(measure.mass):.3e} "
            f"> {thresh:.3e}", condition="mass", order=0,
            magnitude=abs(measure.mass), threshold=thresh)


def _psi_quadratic(mu: DiscreteSignedMeasure, nu: DiscreteSignedMeasure,
                   kernel: CndKernel, psi: PsiFunction) -> float:
    if mu.n == 0 or nu.n == 0:
        return 0.0
    if mu is nu:
        g = pairwise(kernel, mu.atoms)
    else:
        g = pairwise(kernel, mu.atoms, nu.atoms)
    values = eval_closed(psi, g)
    return float(np.einsum("i,ij,j->", mu.weights, values, nu.weights))


# ---------------------------------------------------------------------------
# Lagrange centering


@dataclass(frozen=True)
class CenteredKernel:
    """The transform K_{-gamma} built from a Lagrange basis.

    ``functions[i]`` evaluated at ``points[j]`` must be delta_ij to within
    1e-10 (checked on construction).  ``evaluate`` and ``pairwise`` apply
    the centering formula in the module docstring; K vanishes whenever
    either argument is a basis point.
    """

    base: CndKernel
    points: tuple[Point, ...]
    functions: tuple[Callable[[Point], float], ...]

    def __post_init__(self):
        points = tuple(self.points)
        functions = tuple(self.functions)
        if len(points) == 0 or len(points) != len(functions):
            raise BasisError("need equally many basis points and functions")
        probe = self._function_matrix(points)
        if not np.allclose(probe, np.eye(len(points)), atol=1e-10):
            worst = float(np.max(np.abs(probe - np.eye(len(points)))))
            raise BasisError(
                f"degenerate Lagrange basis: max |p_i(xi_j) - delta_ij| = {worst:.3e}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "functions", functions)

    def _function_matrix(self, pts: Sequence[Point]) -> np.ndarray:
        return np.array([[float(f(p)) for f in self.functions] for p in pts],
                        dtype=float)

    def evaluate(self, x: Point, y: Point) -> float:
        return float(self.pairwise((x,), (y,))[0, 0])

    def pairwise(self, pts_a: Sequence[Point],
                 pts_b: Sequence[Point] | None = None) -> np.ndarray:
        square = pts_b is None
        g_ab = pairwise(self.base, pts_a, pts_b)
        pts_b = pts_a if square else pts_b
        p_a = self._function_matrix(pts_a)
        p_b = p_a if square else self._function_matrix(pts_b)
        g_xi_b = pairwise(self.base, self.points, pts_b)
        g_a_xi = pairwise(self.base, pts_a, self.points)
        g_xi_xi = pairwise(self.base, self.points)
        return (-g_ab
                + np.einsum("ik,kj->ij", p_a, g_xi_b)
                + np.einsum("ik,jk->ij", g_a_xi, p_b)
                - np.einsum("ik,kl,jl->ij", p_a, g_xi_xi, p_b))


def center_kernel(kernel: CndKernel, basis_points: Sequence[Point],
                  basis_functions: Sequence[Callable[[Point], float]]
                  ) -> CenteredKernel:
    """Build the centered kernel K_{-gamma} for a Lagrange basis."""
    return CenteredKernel(kernel, tuple(basis_points), tuple(basis_functions))


def base_point(space: str, dim: int) -> Point:
    """Canonical base point of a space (origin, sheet apex, first pole)."""
    if space == EUCLIDEAN:
        return spaces.euclidean(np.zeros(dim))
    if space == HYPERBOLOID:
        return spaces.hyperboloid(np.zeros(dim))
    if space == SPHERE:
        e1 = np.zeros(dim)
        e1[0] = 1.0
        return spaces.sphere(e1)
    raise DomainError(f"unknown space: {space!r}")


def constant_basis(kernel: CndKernel, dim: int) -> CenteredKernel:
    """The one-dimensional basis {p = 1} anchored at the canonical point."""
    return center_kernel(kernel, (base_point(kernel.space, dim),),
                         (lambda _pt: 1.0,))


# ---------------------------------------------------------------------------
# Moment constraints


def constraint_check(eta: DiscreteSignedMeasure, ell: int, kernel: CndKernel,
                     center: CenteredKernel | None = None,
                     tol: float = DEFAULT_TOL) -> list[dict]:
    """Check the order-ell membership constraints of a measure.

    Order 0 is total mass; order j in 1..ell-1 is the double sum of
    K_{-gamma}^j.  Thresholds are ``tol`` scaled by total variation (and
    by the largest kernel magnitude to the j-th power), so the checks are
    scale aware.  Returns one record per order with the observed magnitude;
    ``ok`` is False where the threshold is exceeded.
    """
    _require_space(eta, kernel)
    records = []
    tv = eta.total_variation
    thresh0 = tol * max(1.0, tv)
    records.append({"order": 0, "condition": "mass",
                    "magnitude": abs(eta.mass), "threshold": thresh0,
                    "ok": abs(eta.mass) <= thresh0})
    if ell >= 2 and eta.n > 0:
        if center is None:
            center = constant_basis(kernel, eta.dim)
        k = center.pairwise(eta.atoms)
        kmax = max(1.0, float(np.max(np.abs(k))))
        for j in range(1, ell):
            value = float(np.einsum("i,ij,j->", eta.weights, k ** j,
                                    eta.weights))
            thresh = tol * max(1.0, tv * tv * kmax ** j)
            records.append({"order": j, "condition": "centered_power",
                            "magnitude": abs(value), "threshold": thresh,
                            "ok": abs(value) <= thresh})
    return records


def _require_constraints(eta: DiscreteSignedMeasure, ell: int,
                         kernel: CndKernel, center: CenteredKernel | None,
                         tol: float, who: str) -> None:
    for rec in constraint_check(eta, ell, kernel, center, tol):
        if not rec["ok"]:
            raise ConstraintError(
                f"{who} violates the order-{rec['order']} constraint "
                f"({rec['condition']}): |value| = {rec['magnitude']:.3e} "
                f"> {rec['threshold']:.3e}",
                condition=rec["condition"], order=rec["order"],
                magnitude=rec["magnitude"], threshold=rec["threshold"])


# ---------------------------------------------------------------------------
# Inner products


def inner_product_bernstein(mu: DiscreteSignedMeasure,
                            nu: DiscreteSignedMeasure, kernel: CndKernel,
                            psi: PsiFunction, tol: float = DEFAULT_TOL) -> float:
    """The energy form -sum sum w w psi(gamma) for a Bernstein psi.

    Requires both measures balanced (mass zero); on those this is a
    semi-inner product, strictly positive on nonzero measures when psi is
    not linear and gamma separates points.
    """
    if psi.ell != 1 or psi.cm_sign != -1:
        raise DomainError(
            f"{psi.name!r} is not a Bernstein entry (need ell=1, Bernstein orientation)")
    _require_space(mu, kernel)
    _require_space(nu, kernel)
    _require_balanced(mu, tol, "mu")
    _require_balanced(nu, tol, "nu")
    return -_psi_quadratic(mu, nu, kernel, psi) + 0.0


def inner_product_ell(mu: DiscreteSignedMeasure, nu: DiscreteSignedMeasure,
                      kernel: CndKernel, psi: PsiFunction,
                      tol: float = DEFAULT_TOL,
                      center: CenteredKernel | None = None) -> float:
    """The order-ell energy form on measures with vanishing moments.

    Evaluates sum sum w w psi_cm(gamma) where psi_cm is the CM_ell
    oriented element (cm_sign times the stored closed form), which is
    nonnegative once both measures satisfy the order-ell constraints.
    Geodesic kernels are accepted (their diagonal is constant zero) but
    the order >= 2 theory is only established for constant-diagonal
    squared-distance kernels; treat those results as exploratory.
    """
    _require_space(mu, kernel)
    _require_space(nu, kernel)
    # All shipped kernels have a constant diagonal by construction; the
    # attribute access is the contract hook for future kernel kinds.
    _ = kernel.diagonal
    _require_constraints(mu, psi.ell, kernel, center, tol, "mu")
    _require_constraints(nu, psi.ell, kernel, center, tol, "nu")
    return psi.cm_sign * _psi_quadratic(mu, nu, kernel, psi) + 0.0


class HyperbolicInnerProduct(NamedTuple):
    value: float
    series_lower_bound: float
    log_term: float
    first_omitted_term: float


def inner_product_hyperbolic(mu: DiscreteSignedMeasure,
                             nu: DiscreteSignedMeasure, terms: int = 12,
                             tol: float = DEFAULT_TOL) -> HyperbolicInnerProduct:
    """Hyperbolic energy form with its positive series lower bound.

    ``value`` is -sum sum w w d(x, y) with d the geodesic distance.  The
    logarithmic expansion of arccosh splits the form, for balanced
    measures, into ``log_term`` (the energy of -log of the Lorentz
    product, itself nonnegative) plus a series of nonnegative terms in
    inverse even powers of the Lorentz product; ``series_lower_bound`` is
    the degree-``terms`` partial sum and ``first_omitted_term`` reports
    the truncation size.
    """
    for eta, who in ((mu, "mu"), (nu, "nu")):
        if eta.atoms and eta.space != HYPERBOLOID:
            raise SpaceMismatchError(f"{who} must live on the hyperboloid")
        _require_balanced(eta, tol, who)
    if mu.n == 0 or nu.n == 0:
        return HyperbolicInnerProduct(0.0, 0.0, 0.0, 0.0)
    kernel = CndKernel(spaces.HYPERBOLIC)
    if mu is nu:
        d = pairwise(kernel, mu.atoms)
    else:
        d = pairwise(kernel, mu.atoms, nu.atoms)
    p = np.maximum(1.0, np.outer(mu.times, nu.times)
                   - np.einsum("ik,jk->ij", mu.coords, nu.coords))
    w_mu, w_nu = mu.weights, nu.weights
    value = -float(np.einsum("i,ij,j->", w_mu, d, w_nu))
    log_term = -float(np.einsum("i,ij,j->", w_mu, np.log(p), w_nu))
    coeffs = spaces.arccosh_coefficients(terms + 1)
    q = p ** -2
    power = np.ones_like(p)
    series = 0.0
    for k in range(1, terms + 1):
        power = power * q
        series += coeffs[k - 1] * float(
            np.einsum("i,ij,j->", w_mu, power, w_nu))
    first_omitted = coeffs[terms] * float(
        np.einsum("i,ij,j->", w_mu, power * q, w_nu))
    return HyperbolicInnerProduct(value + 0.0, series + 0.0, log_term + 0.0,
                                  first_omitted + 0.0)


# ---------------------------------------------------------------------------
# Structural identities


def energy_equals_centered_mmd(eta: DiscreteSignedMeasure, kernel: CndKernel,
                               center: CenteredKernel | None = None,
                               tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Both sides of the identity -sumsum w w gamma = sumsum w w K_{-gamma}.

    Holds whenever the measure annihilates the basis functions (for the
    constant basis: mass zero).  Returns ``(lhs, rhs)`` computed through
    the two independent summation paths.
    """
    _require_space(eta, kernel)
    if eta.n == 0:
        return 0.0, 0.0
    if center is None:
        center = constant_basis(kernel, eta.dim)
    p = center._function_matrix(eta.atoms)
    tv = eta.total_variation
    for k in range(p.shape[1]):
        residual = float(np.dot(eta.weights, p[:, k]))
        scale = tol * max(1.0, tv * max(1.0, float(np.max(np.abs(p[:, k])))))
        if abs(residual) > scale:
            raise ConstraintError(
                f"measure does not annihilate basis function {k}: "
                f"|sum w p| = {abs(residual):.3e} > {scale:.3e}",
                condition="basis_annihilation", order=k,
                magnitude=abs(residual), threshold=scale)
    g = pairwise(kernel, eta.atoms)
    lhs = -float(np.einsum("i,ij,j->", eta.weights, g, eta.weights))
    k_mat = center.pairwise(eta.atoms)
    rhs = float(np.einsum("i,ij,j->", eta.weights, k_mat, eta.weights))
    return lhs + 0.0, rhs + 0.0


class EvenPowerIdentity(NamedTuple):
    lhs: float
    rhs: float
    lower_even_sums: tuple


def even_power_identity(mu: DiscreteSignedMeasure, n: int,
                        tol: float = DEFAULT_TOL) -> EvenPowerIdentity:
    """Binomial expansion identity for the 2n-th distance power.

    For a Euclidean measure whose inner-product double moments vanish up
    to order n - 1,

        (-1)^n sumsum w w |x - y|^{2n}
          = sum_{l=0}^{floor(n/2)} C(n, 2l) C(2l, l) 2^{n-2l}
                sumsum w w <x, y>^{n-2l} |x|^{2l} |y|^{2l},

    every summand on the right is a nonnegative quadratic form, and the
    lower even distance powers 2m (m < n) all integrate to zero.  Returns
    both sides and the tuple of lower even sums.
    """
    if mu.space not in (None, EUCLIDEAN):
        raise SpaceMismatchError("even-power identity requires Euclidean atoms")
    if n < 1:
        raise DomainError("power index n must be >= 1")
    if mu.n == 0:
        return EvenPowerIdentity(0.0, 0.0, (0.0,) * n)
    w = mu.weights
    x = mu.coords
    ip = np.einsum("ik,jk->ij", x, x)
    tv = mu.total_variation
    ip_max = max(1.0, float(np.max(np.abs(ip))))
    for k in range(n):
        moment = float(np.einsum("i,ij,j->", w, ip ** k, w))
        thresh = tol * max(1.0, tv * tv * ip_max ** k)
        if abs(moment) > thresh:
            raise ConstraintError(
                f"inner-product moment of order {k} is {moment:.3e} "
                f"(threshold {thresh:.3e})", condition="ip_moment", order=k,
                magnitude=abs(moment), threshold=thresh)
    sq = cdist(x, x, "sqeuclidean")
    lhs = (-1.0) ** n * float(np.einsum("i,ij,j->", w, sq ** n, w))
    normsq = np.einsum("ik,ik->i", x, x)
    rhs = 0.0
    for l in range(n // 2 + 1):
        coeff = math.comb(n, 2 * l) * math.comb(2 * l, l) * 2.0 ** (n - 2 * l)
        u = w * normsq ** l
        rhs += coeff * float(np.einsum("i,ij,j->", u, ip ** (n - 2 * l), u))
    lower = tuple(float(np.einsum("i,ij,j->", w, sq ** m, w))
                  for m in range(n))
    return EvenPowerIdentity(lhs + 0.0, rhs + 0.0, lower)


def mean_cancel_augment(mu: DiscreteSignedMeasure,
                        t: float) -> DiscreteSignedMeasure:
    """Augment t*mu with atoms that cancel its total mass and vector mean.

    Appends -t*mass(mu) at the origin and the antisymmetric pair
    -(1/2) delta_{t v} + (1/2) delta_{-t v} at plus/minus t times the
    vector mean v of mu.  The result always has zero mass and zero mean.
    """
    if mu.space not in (None, EUCLIDEAN):
        raise SpaceMismatchError("mean cancellation requires Euclidean atoms")
    if not (t > 0):
        raise DomainError("scale t must be > 0")
    if mu.n == 0:
        return mu
    v = mu.mean_vector()
    origin = spaces.euclidean(np.zeros(mu.dim))
    plus = spaces.euclidean(t * v)
    minus = spaces.euclidean(-t * v)
    weights = np.concatenate([t * mu.weights,
                              [-t * mu.mass, -0.5, 0.5]])
    return DiscreteSignedMeasure(mu.atoms + (origin, plus, minus), weights)


# ---------------------------------------------------------------------------
# Moment reports and derived metrics


@dataclass(frozen=True)
class MomentReport:
    """Mass, vector mean, raw symmetric tensor moments and centered powers.

    ``tensors[i]`` is the order-(i + 2) raw moment stored as the flat
    vector of distinct entries indexed by nondecreasing coordinate
    multi-indices (combinations with replacement), hence
    C(m + j - 1, j) entries for order j.
    """

    mass: float
    mean: np.ndarray | None
    tensors: tuple
    centered_powers: tuple


def symmetric_moment(mu: DiscreteSignedMeasure, order: int) -> np.ndarray:
    """Distinct entries of the raw moment tensor sum_i w_i x_i^(tensor j)."""
    if mu.space not in (None, EUCLIDEAN):
        raise SpaceMismatchError("tensor moments require Euclidean atoms")
    x = mu.coords
    w = mu.weights
    m = x.shape[1] if mu.n else 0
    entries = [float(np.dot(w, np.prod(x[:, idx], axis=1)))
               for idx in combinations_with_replacement(range(m), order)]
    return np.array(entries)


def moment_report(mu: DiscreteSignedMeasure, ell: int, kernel: CndKernel,
                  center: CenteredKernel | None = None) -> MomentReport:
    """Collect the order-ell membership data for a measure."""
    if ell < 1:
        raise DomainError("ell must be >= 1")
    _require_space(mu, kernel)
    euclid = mu.space in (None, EUCLIDEAN)
    if not euclid and ell >= 3:
        raise SpaceMismatchError(
            "tensor moments of order >= 2 require Euclidean atoms; "
            "centered powers remain available via constraint_check")
    mean = mu.mean_vector() if euclid else None
    tensors = tuple(symmetric_moment(mu, j) for j in range(2, ell)) if euclid else ()
    powers = []
    if ell >= 2 and mu.n > 0:
        if center is None:
            center = constant_basis(kernel, mu.dim)
        k = center.pairwise(mu.atoms)
        for j in range(1, ell):
            powers.append(float(np.einsum("i,ij,j->", mu.weights, k ** j,
                                          mu.weights)))
    return MomentReport(mu.mass, mean, tensors, tuple(powers))


def psi_metric(x: Point, y: Point, kernel: CndKernel, psi: PsiFunction,
               sqrt_input: bool | None = None) -> float:
    """The transformed metric D(x, y) = psi(distance input).

    ``psi`` must be a metric-safe Bernstein entry (psi(0) = 0,
    nondecreasing, sublinear).  For the squared Euclidean kernel the
    input is the square root of the kernel value (the actual distance);
    pass ``sqrt_input=False`` is rejected there because the squared
    kernel itself is not a metric.  Geodesic kernels are metrics already
    and are used directly unless ``sqrt_input=True`` asks for their
    square-root metric.
    """
    if not psi.metric_safe:
        raise DomainError(
            f"{psi.name!r} is not metric-safe (needs ell=1, psi(0)=0, sublinear)")
    if kernel.kind == EUCLIDEAN_SQUARED:
        if sqrt_input is None:
            sqrt_input = True
        if not sqrt_input:
            raise DomainError(
                "the squared Euclidean kernel is not a metric; its square "
                "root is used as the metric input")
        if kernel.shift != 0.0:
            raise DomainError("metric input requires an unshifted kernel")
    value = spaces.eval_kernel(kernel, x, y)
    if sqrt_input:
        value = math.sqrt(value)
    return float(eval_closed(psi, value))
