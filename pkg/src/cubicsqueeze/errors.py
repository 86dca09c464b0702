"""Exception hierarchy shared by all modules."""


class CubicSqueezeError(Exception):
    """Base class for library errors."""


class InvalidDimensionError(CubicSqueezeError, ValueError):
    pass


class DomainError(CubicSqueezeError, ValueError):
    """A parameter lies outside the domain of the requested operation."""


class TruncationError(CubicSqueezeError):
    """The Fock truncation is too small for the requested accuracy.

    ``defect`` carries the measured error (unitarity defect, lost norm or
    moment drift) so callers can decide how far to escalate.
    """

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


class QuadratureError(CubicSqueezeError):
    pass


class IncompleteKrausError(CubicSqueezeError):
    pass


class UnsupportedDegreeError(CubicSqueezeError, ValueError):
    pass


class NumericalInstabilityError(CubicSqueezeError):
    pass


class InvalidStateError(CubicSqueezeError, ValueError):
    pass


class DegenerateBenchmarkError(CubicSqueezeError, ValueError):
    """The Gaussian benchmark vanishes (z = 0), so the squeezing ratio is undefined."""


class OptimizationError(CubicSqueezeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
