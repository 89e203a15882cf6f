"""Exception hierarchy for geokernel."""


class GeoKernelError(Exception):
    """Base class for all errors raised by this package."""


class DuplicatePoints(GeoKernelError, ValueError):
    """Two or more points of a cloud coincide."""


class IllConditioned(GeoKernelError, ArithmeticError):
    """The regularized Gram matrix could not be factorized."""


class NonDifferentiableKernel(GeoKernelError, ValueError):
    """A derivative was requested that the kernel does not possess."""


class DegenerateGradient(GeoKernelError, ArithmeticError):
    """The signature function gradient is too small to define a normal.

    Attributes
    ----------
    grad_norm : float
        Length of the offending gradient.
    index : int or None
        Position of the offending point in a batch, when known.
    """

    def __init__(self, message, grad_norm=float("nan"), index=None):
        super().__init__(message)
        self.grad_norm = grad_norm
        self.index = index


class MalformedModelFile(GeoKernelError, ValueError):
    """A serialized model could not be decoded."""


class OffSurfacePoint(GeoKernelError, ValueError):
    """A point handed to an analytic ground-truth routine is not on the surface."""


class ZeroReference(GeoKernelError, ValueError):
    """An orientation reference vector is zero."""
