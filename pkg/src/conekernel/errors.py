"""Exception types shared across the package."""


class ConeKernelError(Exception):
    """Base class for all package errors."""


class DimensionError(ConeKernelError, ValueError):
    pass


class UndefinedGradientError(ConeKernelError, ValueError):
    pass


class NoUniqueRayError(ConeKernelError):
    """The gauge is not smooth and strictly convex, so sigma-rays are not unique."""


class UnsupportedOperation(ConeKernelError):
    pass


class SolverError(ConeKernelError):
    """An iterative solve failed to converge; ``residual`` carries the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
