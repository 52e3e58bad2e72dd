"""Exception types shared across the package."""


class BernergyError(Exception):
    """Base class for all package errors."""


class SpaceMismatchError(BernergyError, ValueError):
    """Points (or a point and a kernel) live in different spaces."""


class NonFiniteError(BernergyError, ValueError):
    """An input coordinate, weight or matrix entry is NaN or infinite."""


class DomainError(BernergyError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class ConstraintError(BernergyError, ValueError):
    """A measure violates a moment constraint required by the operation.

    Attributes
    ----------
    condition : str
        Name of the violated condition (e.g. ``"mass"``, ``"centered_power"``).
    order : int or None
        The moment order j whose constraint failed, when applicable.
    magnitude : float or None
        Observed size of the violation.
    threshold : float or None
        Tolerance the magnitude was compared against.
    """

    def __init__(self, message, *, condition=None, order=None, magnitude=None,
                 threshold=None):
        super().__init__(message)
        self.condition = condition
        self.order = order
        self.magnitude = magnitude
        self.threshold = threshold


class BasisError(BernergyError, ValueError):
    """A Lagrange basis is degenerate: p_i(xi_j) is not close to delta_ij."""


class RepresentationUnavailableError(BernergyError, ValueError):
    """The function is catalogued closed-form only (no integral density)."""


class QuadratureError(BernergyError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance.

    Carries the best estimate computed so far and the error bound reported
    by the integrator.
    """

    def __init__(self, message, *, estimate, error_bound):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class PointcloudFormatError(BernergyError, ValueError):
    """Base class for point-cloud file format problems."""

    def __init__(self, message, *, path=None, row=None):
        super().__init__(message)
        self.path = path
        self.row = row


class RaggedRowError(PointcloudFormatError):
    """Rows of the input file have inconsistent column counts."""


class NonNumericCellError(PointcloudFormatError):
    """A data cell could not be parsed as a number."""


class EmptyPointcloudError(PointcloudFormatError):
    """The input file contains no data rows."""
