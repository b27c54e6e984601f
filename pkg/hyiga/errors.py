"""Exception hierarchy shared by every hyiga sub-package."""
from typing import Optional

__all__ = [
    "HyigaError",
    "ConfigurationError",
    "DomainError",
    "RefinementError",
    "InputError",
    "NumericalError",
    "MeshError",
    "ElementError",
    "FormulationError",
    "SingularSystemError",
    "ResidualError",
]


class HyigaError(Exception):
    """Base class of all errors raised by hyiga."""


class ConfigurationError(HyigaError, ValueError):
    """Invalid material, degree or run configuration.

    Args:
        message: description of the problem.
        line: 1-based line of the offending entry when it comes from a config file.
    """

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = "line {}: {}".format(line, message)
        super().__init__(message)


class DomainError(HyigaError, ValueError):
    """Parametric coordinate outside the knot range or outside an element."""


class RefinementError(HyigaError, ValueError):
    """Knot insertion or degree elevation would break the knot vector invariants."""


class InputError(HyigaError, ValueError):
    """Malformed patch data, boundary specification or load."""


class NumericalError(HyigaError, RuntimeError):
    """Failure during the numerical pipeline."""


class MeshError(NumericalError):
    """Inverted or degenerate element (non-positive Jacobian determinant)."""

    def __init__(self, message: str, element: Optional[int] = None) -> None:
        self.element = element
        super().__init__(message)


class ElementError(NumericalError):
    """Singular parametric-to-physical Jacobian inside an element."""

    def __init__(self, message: str, element: Optional[int] = None) -> None:
        self.element = element
        super().__init__(message)


class FormulationError(NumericalError):
    """The hybrid flexibility matrix H of an element is not positive definite."""

    def __init__(self, message: str, element: Optional[int] = None) -> None:
        self.element = element
        super().__init__(message)


class SingularSystemError(NumericalError):
    """Cholesky factorization of the reduced stiffness failed."""

    def __init__(self, message: str, dof: Optional[int] = None) -> None:
        self.dof = dof
        super().__init__(message)


class ResidualError(NumericalError):
    """The solved system misses its residual bound ``|K u - f| / |f|``."""

    def __init__(self, message: str, residual: float, tolerance: float) -> None:
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(message)
