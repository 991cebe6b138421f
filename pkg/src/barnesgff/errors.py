"""Exception hierarchy shared by all modules."""


class BarnesError(Exception):
    """Base class for library errors."""


class DomainError(BarnesError, ValueError):
    """Argument outside the region where the quantity is defined."""


class PoleError(DomainError):
    """Evaluation hit a pole (or zero) of a multiple gamma factor.

    ``location`` is the offending argument, ``lattice_point`` the nearest
    point of the form ``-Omega`` when it is known.
    """

    def __init__(self, message, location=None, lattice_point=None):
        super().__init__(message)
        self.location = location
        self.lattice_point = lattice_point


class ContractError(BarnesError, ValueError):
    """Operation called on an object that violates its precondition."""


class QuadratureError(BarnesError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, partial=None, error_estimate=None):
        super().__init__(message)
        self.partial = partial
        self.error_estimate = error_estimate


class InversionError(BarnesError, RuntimeError):
    """Characteristic function inversion failed (no decay or large repair)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class VerificationError(BarnesError, AssertionError):
    """Two independent evaluations of the same quantity disagree."""

    def __init__(self, message, values=None):
        super().__init__(message)
        self.values = values or {}
