"""Exception types shared across the package."""


class BdrisError(Exception):
    """Base class for all errors raised by this package."""


class ArgumentError(BdrisError, ValueError):
    """Invalid argument: bad shape, empty input, out-of-range scalar."""


class SkewToleranceError(BdrisError, ValueError):
    """Input fails the skew-Hermitian tolerance check.

    Deliberately not silently symmetrized: a non-skew input usually means
    a gradient bug upstream.
    """


class SingularMatrixError(BdrisError, ValueError):
    """Matrix is singular or near-singular where an invertible one is required."""


class DegenerateSceneError(BdrisError, RuntimeError):
    """Channel power fell below the degeneracy guard; the bound is undefined."""


class ConfigError(BdrisError, ValueError):
    """Invalid experiment configuration; message carries the offending key or line."""
