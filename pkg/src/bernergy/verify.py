"""Numerical certification of kernel structure on finite samples.

Every check returns a :class:`VerificationReport` with a pass flag, the
tolerance used, the worst-case witness found and the seed of any sampling
involved, so a failed certificate is reproducible.  These are property
probes on sampled finite sets, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import null_space

from . import energy, spaces
from .cmfun import PsiFunction
from .errors import DomainError, NonFiniteError
from .spaces import EUCLIDEAN, HYPERBOLOID, SPHERE, CndKernel, GramMatrix, Point

DEFAULT_EIG_TOL = 1e-10


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one numerical check."""

    check: str
    passed: bool
    tolerance: float
    n_samples: int
    seed: int | None
    margins: dict = field(default_factory=dict)
    witness: dict = field(default_factory=dict)
    notes: tuple = ()

    def as_dict(self) -> dict:
        return {
            "check": self.check,
            "pass": self.passed,
            "tolerance": self.tolerance,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "margins": dict(self.margins),
            "witness": _jsonable(self.witness),
            "notes": list(self.notes),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _as_matrix(g) -> np.ndarray:
    values = g.values if isinstance(g, GramMatrix) else np.asarray(g, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise DomainError("expected a square matrix")
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("non-finite matrix entry")
    return values


def check_psd(g, tol: float = DEFAULT_EIG_TOL) -> VerificationReport:
    """Spectral positive semidefiniteness check.

    Passes when the smallest eigenvalue of the symmetrized matrix is at
    least ``-tol * n * maxdiag``; the witness records that eigenvalue and
    its eigenvector.
    """
    values = _as_matrix(g)
    n = values.shape[0]
    sym = 0.5 * (values + values.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    max_diag = float(np.max(np.abs(np.diag(sym)))) if n else 0.0
    threshold = -tol * n * max_diag
    min_eig = float(eigvals[0])
    return VerificationReport(
        check="psd", passed=min_eig >= threshold, tolerance=tol, n_samples=n,
        seed=None,
        margins={"min_eigenvalue": min_eig, "threshold": threshold},
        witness={"eigenvalue": min_eig, "eigenvector": eigvecs[:, 0]})


def check_cpd(g, constraints: np.ndarray,
              tol: float = DEFAULT_EIG_TOL) -> VerificationReport:
    """Conditional positive semidefiniteness against a constraint matrix.

    ``constraints`` has one row per annihilated function, entries
    p_k(x_i).  An orthonormal basis of the null space { c : C c = 0 } is
    built and the projected matrix is checked for PSD.  Rank-deficient
    constraint matrices are noted in the report and handled with their
    actual rank; an empty constraint set degenerates to ``check_psd``.
    """
    values = _as_matrix(g)
    n = values.shape[0]
    constraints = np.asarray(constraints, dtype=float).reshape(-1, n) \
        if np.size(constraints) else np.zeros((0, n))
    notes = []
    if constraints.shape[0] == 0:
        base = check_psd(values, tol)
        return VerificationReport(
            check="cpd", passed=base.passed, tolerance=tol, n_samples=n,
            seed=None, margins=base.margins, witness=base.witness,
            notes=("empty constraint set: plain PSD check",))
    rank = int(np.linalg.matrix_rank(constraints))
    if rank < constraints.shape[0]:
        notes.append(f"constraint matrix rank {rank} < {constraints.shape[0]} rows")
    basis = null_space(constraints)
    if basis.shape[1] == 0:
        return VerificationReport(
            check="cpd", passed=True, tolerance=tol, n_samples=n, seed=None,
            margins={"min_eigenvalue": math.inf, "threshold": 0.0},
            witness={}, notes=tuple(notes) + ("constraints leave no free directions",))
    projected = basis.T @ (0.5 * (values + values.T)) @ basis
    projected = 0.5 * (projected + projected.T)
    eigvals, eigvecs = np.linalg.eigh(projected)
    min_eig = float(eigvals[0])
    max_diag = max(float(np.max(np.abs(np.diag(projected)))),
                   float(np.max(np.abs(np.diag(values)))))
    threshold = -tol * n * max_diag
    coeff = basis @ eigvecs[:, 0]
    return VerificationReport(
        check="cpd", passed=min_eig >= threshold, tolerance=tol, n_samples=n,
        seed=None,
        margins={"min_eigenvalue": min_eig, "threshold": threshold,
                 "null_space_dim": basis.shape[1]},
        witness={"eigenvalue": min_eig, "coefficients": coeff},
        notes=tuple(notes))


def check_schoenberg(kernel: CndKernel, pts: Sequence[Point],
                     r_grid: Sequence[float],
                     tol: float = DEFAULT_EIG_TOL) -> VerificationReport:
    """PSD of the exponential transforms e^{-r gamma} over a grid of r > 0."""
    r_grid = [float(r) for r in r_grid]
    if any(r <= 0 for r in r_grid):
        raise DomainError("Schoenberg grid values must be positive")
    g = spaces.pairwise(kernel, pts)
    worst = {"r": None, "min_eigenvalue": math.inf, "threshold": 0.0}
    all_pass = True
    for r in r_grid:
        rep = check_psd(np.exp(-r * g), tol)
        margin = rep.margins["min_eigenvalue"] - rep.margins["threshold"]
        if worst["r"] is None or margin < worst["margin"]:
            worst = {"r": r, "min_eigenvalue": rep.margins["min_eigenvalue"],
                     "threshold": rep.margins["threshold"], "margin": margin}
        all_pass = all_pass and rep.passed
    return VerificationReport(
        check="schoenberg", passed=all_pass, tolerance=tol,
        n_samples=len(pts), seed=None,
        margins={"worst_r": worst["r"],
                 "min_eigenvalue": worst["min_eigenvalue"],
                 "threshold": worst["threshold"]},
        witness={"kernel": kernel.name, "r_grid": r_grid})


def check_triangle(metric: Callable[[Point, Point], float],
                   pts: Sequence[Point], n_triples: int, seed: int,
                   tol: float = 1e-12) -> VerificationReport:
    """Triangle inequality on randomly sampled triples of a point set.

    The full pairwise table is evaluated once; triples are then index
    samples, so large triple counts stay cheap.  The worst violation
    D(x, y) - D(x, z) - D(z, y) is reported with its witness indices.
    """
    if n_triples < 1:
        raise DomainError("need at least one triple")
    n = len(pts)
    if n < 3:
        raise DomainError("need at least three points")
    table = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            value = float(metric(pts[i], pts[j]))
            table[i, j] = value
            table[j, i] = value
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_triples, 3))
    violation = table[idx[:, 0], idx[:, 1]] - table[idx[:, 0], idx[:, 2]] \
        - table[idx[:, 2], idx[:, 1]]
    worst_pos = int(np.argmax(violation))
    worst = float(violation[worst_pos])
    return VerificationReport(
        check="triangle", passed=worst <= tol, tolerance=tol,
        n_samples=n_triples, seed=seed,
        margins={"max_violation": worst},
        witness={"indices": idx[worst_pos].tolist(),
                 "sides": [float(table[idx[worst_pos, 0], idx[worst_pos, 1]]),
                           float(table[idx[worst_pos, 0], idx[worst_pos, 2]]),
                           float(table[idx[worst_pos, 2], idx[worst_pos, 1]])]})


def random_points(rng: np.random.Generator, n: int, dim: int,
                  space: str = EUCLIDEAN, scale: float = 1.0) -> list[Point]:
    """Standard-normal coordinate points, projected onto the target space."""
    coords = scale * rng.standard_normal((n, dim))
    if space == EUCLIDEAN:
        return [spaces.euclidean(row) for row in coords]
    if space == HYPERBOLOID:
        return [spaces.hyperboloid(row) for row in coords]
    if space == SPHERE:
        return [spaces.sphere(row) for row in coords]
    raise DomainError(f"unknown space: {space!r}")


def random_balanced_measure(rng: np.random.Generator, dim: int,
                            space: str = EUCLIDEAN, level: int = 1,
                            max_atoms: int = 10,
                            scale: float = 1.0) -> energy.DiscreteSignedMeasure:
    """Random nonzero measure satisfying the order-``level`` constraints.

    Atom count is uniform on 2..max_atoms, coordinates are standard
    normal, weights are standard normal projected onto the constraint set
    (mass zero; for level 2 additionally mean zero, Euclidean only).
    Degenerate draws are resampled.
    """
    if level not in (1, 2):
        raise DomainError("supported constraint levels: 1, 2")
    if level == 2 and space != EUCLIDEAN:
        raise DomainError("level-2 constraints need Euclidean atoms")
    while True:
        n = int(rng.integers(2, max_atoms + 1))
        if level == 2 and n < dim + 2:
            n = dim + 2
        pts = random_points(rng, n, dim, space, scale)
        w = rng.standard_normal(n)
        rows = [np.ones(n)]
        if level == 2:
            rows.extend(np.array([p.coords[k] for p in pts]) for k in range(dim))
        c = np.vstack(rows)
        basis = null_space(c)
        if basis.shape[1] == 0:
            continue
        w = basis @ (basis.T @ w)
        tv = float(np.sum(np.abs(w)))
        if tv < 1e-8:
            continue
        return energy.DiscreteSignedMeasure(tuple(pts), w / tv)


def probe_strong_negative_type(kernel: CndKernel, psi: PsiFunction, dim: int,
                               n_trials: int, seed: int, tol: float = 0.0,
                               max_atoms: int = 10,
                               extra_measures: Sequence = ()
                               ) -> VerificationReport:
    """Monte-Carlo positivity probe of the energy form I(eta, eta).

    Draws ``n_trials`` random nonzero balanced measures, evaluates the
    energy form for the given transform and kernel, and passes when every
    value exceeds ``tol``.  The minimum and its witness measure are
    reported.  ``extra_measures`` lets callers inject hand-built
    degenerate witnesses into the trial set (the generator itself will
    essentially never hit a measure-zero degeneracy).
    """
    if psi.is_polynomial:
        note = (f"{psi.name!r} is polynomial: strict positivity is "
                "expected to fail on constrained measures",)
    else:
        note = ()
    rng = np.random.default_rng(seed)
    level = 1
    minimum = math.inf
    witness = {}
    count = 0
    for trial in range(n_trials):
        eta = random_balanced_measure(rng, dim, kernel.space, level, max_atoms)
        value = _probe_value(eta, kernel, psi)
        count += 1
        if value < minimum:
            minimum = value
            witness = _measure_witness(trial, eta, value)
    for extra_pos, eta in enumerate(extra_measures):
        value = _probe_value(eta, kernel, psi)
        count += 1
        if value < minimum:
            minimum = value
            witness = _measure_witness(-(extra_pos + 1), eta, value)
    return VerificationReport(
        check="strong_negative_type", passed=minimum > tol, tolerance=tol,
        n_samples=count, seed=seed,
        margins={"min_value": minimum},
        witness=witness, notes=note)


def _probe_value(eta, kernel, psi) -> float:
    if psi.ell == 1 and psi.cm_sign == -1:
        return energy.inner_product_bernstein(eta, eta, kernel, psi)
    return energy.inner_product_ell(eta, eta, kernel, psi)


def _measure_witness(trial: int, eta, value: float) -> dict:
    return {
        "trial": trial,
        "value": value,
        "atoms": eta.coords,
        "weights": eta.weights,
        "mean": eta.mean_vector() if eta.space == EUCLIDEAN else None,
    }
