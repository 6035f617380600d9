"""Exception types shared across the package."""


class SparseCSMError(Exception):
    """Base class for all package errors."""


class DimensionError(SparseCSMError, ValueError):
    pass


class OversizeError(SparseCSMError, ValueError):
    """Raised when a test-scale construction would be too large to build."""


class NumericalError(SparseCSMError, ArithmeticError):
    pass


class ParameterError(SparseCSMError, ValueError):
    pass


class GeometryError(SparseCSMError, ValueError):
    """Degenerate geometry, e.g. a focus point coinciding with a microphone."""


class ScenarioError(SparseCSMError, ValueError):
    """Invalid scenario or configuration document."""


class InsufficientDataError(SparseCSMError, ValueError):
    pass


class DivergenceError(SparseCSMError, RuntimeError):
    """A solver run produced a non-finite or exploding energy.

    The partial :class:`~sparsecsm.solvers.SolveReport` is attached as
    ``report`` so callers can persist the trace.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
