"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: configuration and input problems
(ParseError, ConfigError, SpecError, usage mistakes) exit with 1, numeric
and runtime failures exit with 2.
"""


class MonowarpError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(MonowarpError):
    """Cholesky factorization failed at every jitter level."""


class InvalidLengthscale(MonowarpError):
    """A kernel lengthscale is zero, negative, or non-finite."""


class EmptyGrid(MonowarpError):
    """Reference grid has fewer than two nodes."""


class LengthMismatch(MonowarpError):
    """Vector length does not match the expected dimension."""


class DegenerateInput(MonowarpError):
    """Input is constant where variation is required."""


class ShrinkLimitExceeded(MonowarpError):
    """Elliptical slice bracket shrank past the configured cap.

    Signals a broken likelihood (e.g. returning -inf everywhere), not a
    statistical failure of the sampler.
    """


class TooFewObservations(MonowarpError):
    """n <= p: residual scale is undefined."""


class DegenerateResiduals(MonowarpError):
    """Residual scale underflowed; the noise-free fit is ill-posed."""


class NonFiniteResponse(MonowarpError):
    """Response vector contains NaN or infinity."""


class DofTooSmall(MonowarpError):
    """Student-t degrees of freedom too small for the requested moment."""


class UnknownFunction(MonowarpError):
    """Benchmark function name is not registered."""


class NonPositiveVariance(MonowarpError):
    """Predictive variance must be strictly positive."""


class ParseError(MonowarpError):
    """A data file could not be parsed; message cites row and column."""


class ConfigError(MonowarpError):
    """A configuration key is unknown or its value is invalid."""


class SpecError(MonowarpError):
    """An experiment spec names an unknown field, function, or method."""


class DimensionMismatch(MonowarpError):
    """Test inputs do not match the dimension the chain was trained on."""


class VersionMismatch(MonowarpError):
    """Chain file format version or model tag does not match."""
