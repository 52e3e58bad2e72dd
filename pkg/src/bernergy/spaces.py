"""Point spaces and the continuous negative definite kernels defined on them.

Three spaces are supported:

* Euclidean vectors in R^m, with the squared-distance kernel
  ``|x - y|^2 + c`` (optional constant shift ``c >= 0``);
* the upper hyperboloid sheet ``{(x, t): t^2 - |x|^2 = 1, t > 0}``, with the
  geodesic distance ``arccosh(t_x t_y - <x, y>)``;
* the unit sphere, with the geodesic angle.

All values are immutable after construction and every operation is pure, so
points and kernels are safe to share across threads.  Pairwise kernel
matrices are evaluated with one fixed per-entry expression, which makes them
bitwise symmetric and reproducible run to run.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DomainError, NonFiniteError, SpaceMismatchError

EUCLIDEAN = "euclidean"
HYPERBOLOID = "hyperboloid"
SPHERE = "sphere"

EUCLIDEAN_SQUARED = "euclidean_squared"
HYPERBOLIC = "hyperbolic"
SPHERE_GEODESIC = "sphere_geodesic"

_KERNEL_SPACE = {
    EUCLIDEAN_SQUARED: EUCLIDEAN,
    HYPERBOLIC: HYPERBOLOID,
    SPHERE_GEODESIC: SPHERE,
}

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Point:
    """A point of one of the supported spaces.

    ``coords`` holds the spatial coordinates.  Hyperboloid points carry the
    extra time coordinate ``t``; it is recomputed from the coordinates on
    construction so that ``t^2 - |coords|^2 = 1`` holds to within 1e-12.
    Sphere coordinates are renormalized to unit length on construction.
    """

    space: str
    coords: np.ndarray
    t: float | None = None

    def __post_init__(self):
        c = np.array(self.coords, dtype=float, copy=True).reshape(-1)
        if c.size < 1:
            raise DomainError("a point needs at least one coordinate")
        if not np.all(np.isfinite(c)):
            raise NonFiniteError("non-finite coordinate in point")
        if self.space == EUCLIDEAN:
            if self.t is not None:
                raise DomainError("euclidean points carry no time coordinate")
            t = None
        elif self.space == HYPERBOLOID:
            if self.t is not None and (not math.isfinite(self.t) or self.t <= 0):
                raise DomainError("hyperboloid time coordinate must be > 0")
            # Renormalize onto the sheet: the spatial part determines t.
            t = math.sqrt(1.0 + float(np.dot(c, c)))
        elif self.space == SPHERE:
            if self.t is not None:
                raise DomainError("sphere points carry no time coordinate")
            n = math.sqrt(float(np.dot(c, c)))
            if n == 0.0:
                raise DomainError("cannot normalize the zero vector to the sphere")
            c = c / n
            t = None
        else:
            raise DomainError(f"unknown space: {self.space!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "t", t)

    @property
    def dim(self) -> int:
        return int(self.coords.size)


def euclidean(coords) -> Point:
    return Point(EUCLIDEAN, np.asarray(coords, dtype=float))


def hyperboloid(coords, t: float | None = None) -> Point:
    """Hyperboloid point from spatial coordinates; ``t`` is recomputed."""
    return Point(HYPERBOLOID, np.asarray(coords, dtype=float), t)


def sphere(coords) -> Point:
    return Point(SPHERE, np.asarray(coords, dtype=float))


@dataclass(frozen=True)
class CndKernel:
    """A continuous conditionally negative definite kernel on one space.

    ``euclidean_squared`` is ``|x - y|^2 + shift`` (constant diagonal equal
    to ``shift``); ``hyperbolic`` and ``sphere_geodesic`` are the geodesic
    distances of their spaces (zero diagonal).
    """

    kind: str
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in _KERNEL_SPACE:
            raise DomainError(f"unknown kernel kind: {self.kind!r}")
        if not math.isfinite(self.shift) or self.shift < 0:
            raise DomainError("kernel shift must be finite and >= 0")
        if self.shift != 0.0 and self.kind != EUCLIDEAN_SQUARED:
            raise DomainError("only euclidean_squared supports a shift")

    @property
    def space(self) -> str:
        return _KERNEL_SPACE[self.kind]

    @property
    def diagonal(self) -> float:
        """The constant value of gamma(x, x)."""
        return self.shift if self.kind == EUCLIDEAN_SQUARED else 0.0

    @property
    def name(self) -> str:
        if self.kind == EUCLIDEAN_SQUARED and self.shift != 0.0:
            return f"{self.kind}:{self.shift:g}"
        return self.kind


def _check_pair(kernel: CndKernel, x: Point, y: Point) -> None:
    if x.space != y.space:
        raise SpaceMismatchError(f"points live in {x.space!r} vs {y.space!r}")
    if x.space != kernel.space:
        raise SpaceMismatchError(
            f"kernel {kernel.name!r} expects {kernel.space!r} points, got {x.space!r}")
    if x.dim != y.dim:
        raise SpaceMismatchError(f"dimension mismatch: {x.dim} vs {y.dim}")


def lorentz_product(x: Point, y: Point) -> float:
    """Bilinear form t_x t_y - <x, y>; equals cosh of the geodesic distance."""
    if x.space != HYPERBOLOID or y.space != HYPERBOLOID:
        raise SpaceMismatchError("lorentz_product needs two hyperboloid points")
    if x.dim != y.dim:
        raise SpaceMismatchError(f"dimension mismatch: {x.dim} vs {y.dim}")
    return x.t * y.t - float(np.dot(x.coords, y.coords))


def eval_kernel(kernel: CndKernel, x: Point, y: Point) -> float:
    """Evaluate gamma(x, y).  Symmetric, nonnegative, declared diagonal."""
    _check_pair(kernel, x, y)
    if kernel.kind == EUCLIDEAN_SQUARED:
        d = x.coords - y.coords
        return float(np.dot(d, d)) + kernel.shift
    if kernel.kind == HYPERBOLIC:
        if x is y or bool(np.array_equal(x.coords, y.coords)):
            return 0.0
        # Clamp at 1: rounding can push the product of near-identical points
        # slightly below the valid cosh range.
        return math.acosh(max(1.0, lorentz_product(x, y)))
    # Sphere geodesic via atan2 of chordal lengths: accurate near 0 and pi.
    dm = x.coords - y.coords
    dp = x.coords + y.coords
    return 2.0 * math.atan2(math.sqrt(float(np.dot(dm, dm))),
                            math.sqrt(float(np.dot(dp, dp))))


def arccosh_coefficients(k_max: int) -> np.ndarray:
    """Coefficients c_k = (2k)! / (2^{2k} (k!)^2 2k) for k = 1..k_max."""
    if k_max < 0:
        raise DomainError("coefficient count must be >= 0")
    out = np.empty(k_max)
    central = 1.0  # (2k)! / (2^{2k} (k!)^2), updated iteratively
    for k in range(1, k_max + 1):
        central *= (2 * k - 1) / (2 * k)
        out[k - 1] = central / (2 * k)
    return out


def arccosh_series(t: float, terms: int) -> tuple[float, float]:
    """Truncated logarithmic series for arccosh(t), valid for t > 1.

    Returns ``(value, tail_bound)`` where ``value`` is

        log 2 + log t - sum_{k=1}^{terms} (2k)! / (2^{2k} (k!)^2 2k) t^{-2k}.

    All series terms are positive, so the value is nonincreasing in
    ``terms`` and converges to arccosh(t) from above.  The returned
    ``tail_bound`` dominates ``|value - arccosh(t)|``: it is the first
    omitted term inflated by the geometric factor 1 / (1 - t^{-2}) (the
    coefficients decrease, so the omitted tail is below that geometric
    sum), plus a small float64 rounding allowance proportional to the
    magnitude of the summed terms.
    """
    if not (t > 1.0):
        raise DomainError("arccosh series requires t > 1")
    if terms < 0:
        raise DomainError("number of series terms must be >= 0")
    coeffs = arccosh_coefficients(terms + 1)
    q = t ** -2
    value = math.log(2.0) + math.log(t)
    mag = abs(value)
    power = 1.0  # t^{-2k}
    for k in range(1, terms + 1):
        power *= q
        term = coeffs[k - 1] * power
        value -= term
        mag += term
    first_omitted = coeffs[terms] * power * q
    tail_bound = first_omitted / (1.0 - q) + 8.0 * _EPS * mag
    return value, tail_bound


def _split_points(pts: Sequence[Point]):
    """Validate a homogeneous point list; return (space, coords, times)."""
    if len(pts) == 0:
        raise DomainError("empty point list")
    space = pts[0].space
    dim = pts[0].dim
    for p in pts:
        if p.space != space or p.dim != dim:
            raise SpaceMismatchError("mixed spaces or dimensions in point list")
    X = np.array([p.coords for p in pts], dtype=float)
    tv = np.array([p.t for p in pts], dtype=float) if space == HYPERBOLOID else None
    return space, X, tv


def pairwise(kernel: CndKernel, pts_a: Sequence[Point],
             pts_b: Sequence[Point] | None = None) -> np.ndarray:
    """Kernel matrix gamma(a_i, b_j); square with exact diagonal if b is None.

    Entries are produced by one fixed expression per pair, so square
    matrices are bitwise symmetric.  Pairs with identical coordinates
    evaluate to the exact declared diagonal value.
    """
    space_a, A, ta = _split_points(pts_a)
    square = pts_b is None
    if square:
        space_b, B, tb = space_a, A, ta
    else:
        space_b, B, tb = _split_points(pts_b)
    if space_a != space_b or A.shape[1] != B.shape[1]:
        raise SpaceMismatchError("point lists live in different spaces")
    if space_a != kernel.space:
        raise SpaceMismatchError(
            f"kernel {kernel.name!r} expects {kernel.space!r} points")

    if kernel.kind == EUCLIDEAN_SQUARED:
        G = cdist(A, B, "sqeuclidean") + kernel.shift
        if square:
            np.fill_diagonal(G, kernel.shift)
        return G
    if kernel.kind == HYPERBOLIC:
        # einsum keeps a fixed summation order, hence bitwise symmetry.
        P = np.outer(ta, tb) - np.einsum("ik,jk->ij", A, B)
        G = np.arccosh(np.maximum(1.0, P))
        dup = cdist(A, B, "sqeuclidean") == 0.0
        G[dup] = 0.0
        return G
    num = cdist(A, B, "euclidean")
    den = cdist(A, -B, "euclidean")
    G = 2.0 * np.arctan2(num, den)
    if square:
        np.fill_diagonal(G, 0.0)
    return G


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric kernel matrix on a finite point set, with provenance."""

    values: np.ndarray
    kernel_name: str
    points_hash: str

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


def points_digest(pts: Sequence[Point]) -> str:
    space, X, tv = _split_points(pts)
    h = hashlib.sha256()
    h.update(space.encode())
    h.update(X.tobytes())
    if tv is not None:
        h.update(tv.tobytes())
    return h.hexdigest()[:16]


def gram(kernel: CndKernel, pts: Sequence[Point]) -> GramMatrix:
    """Kernel Gram matrix G[i, j] = gamma(pts[i], pts[j])."""
    values = pairwise(kernel, pts)
    values.setflags(write=False)
    return GramMatrix(values, kernel.name, points_digest(pts))
