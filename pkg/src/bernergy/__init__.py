"""Generalized energy distances built from Bernstein-transformed kernels.

The package computes energy forms I(mu, nu) = +/- sumsum w w psi(gamma)
for finitely supported signed measures, where gamma is a conditionally
negative definite kernel (squared Euclidean, hyperbolic or spherical
geodesic) and psi a Bernstein or higher-order completely monotone
transform, and numerically certifies the structural properties these
forms rely on (positive definite spectra, metric axioms, moment
constraints, strict positivity).
"""

from . import _threads  # noqa: F401  (apply BERNERGY_THREADS before numpy)

__version__ = "0.1.0"

from .cmfun import (PsiFunction, catalog, change_envelope, eval_by_representation,
                    eval_closed, exp_partial, get_psi, make_pow, omega_trunc)
from .energy import (CenteredKernel, DiscreteSignedMeasure, MomentReport,
                     center_kernel, constant_basis, constraint_check,
                     difference, dirac, energy_equals_centered_mmd,
                     even_power_identity, inner_product_bernstein,
                     inner_product_ell, inner_product_hyperbolic,
                     mean_cancel_augment, moment_report, psi_metric)
from .errors import (BasisError, BernergyError, ConstraintError, DomainError,
                     NonFiniteError, QuadratureError,
                     RepresentationUnavailableError, SpaceMismatchError)
from .spaces import (CndKernel, GramMatrix, Point, arccosh_series, eval_kernel,
                     euclidean, gram, hyperboloid, lorentz_product, pairwise,
                     sphere)
from .stats import SampleSet, TestResult, energy_statistic, permutation_test
from .verify import (VerificationReport, check_cpd, check_psd,
                     check_schoenberg, check_triangle,
                     probe_strong_negative_type, random_balanced_measure,
                     random_points)

__all__ = [name for name in dir() if not name.startswith("_")]
