"""Exception hierarchy shared by all modules."""


class BispectralError(Exception):
    """Base class for every error raised by this package."""


class MixedBackendError(BispectralError, TypeError):
    """Float and exact scalars were combined in one object."""


class ExactBackendUnsupported(BispectralError):
    pass


class SingularMatrix(BispectralError, ArithmeticError):
    """Raised when a matrix is singular (exactly, or below the float threshold)."""

    def __init__(self, message, det_abs=None):
        super().__init__(message)
        self.det_abs = det_abs


class NoConvergence(BispectralError, ArithmeticError):
    pass


class NotRankOne(BispectralError, ValueError):
    pass


class DegenerateSpectrum(BispectralError, ValueError):
    pass


class NonSemisimpleQ(BispectralError, ValueError):
    pass


class PoleInZ(BispectralError, ArithmeticError):
    pass


class PoleInX(BispectralError, ArithmeticError):
    pass


class SingularQ(BispectralError, ArithmeticError):
    pass


class SingularRho(BispectralError, ArithmeticError):
    pass


class SingularSystem(BispectralError, ArithmeticError):
    pass


class InvalidRho(BispectralError, ValueError):
    pass
