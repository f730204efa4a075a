"""Exception types raised across the package."""


class LevyLabError(Exception):
    """Base class for all package errors."""


class DegenerateSpectralMeasure(LevyLabError):
    """The spectral measure is supported in a proper linear subspace."""


class GridTooCoarse(LevyLabError):
    """The grid cannot resolve the requested Fourier inversion."""


class SpectralTailTooLarge(LevyLabError):
    """A field carries too much energy near the Nyquist band."""


class NoContraction(LevyLabError):
    """A Picard iteration did not reach tolerance within its budget."""


class InsufficientNodes(LevyLabError):
    """Too few time nodes inside a fit window."""


class LambdaCapExceeded(LevyLabError):
    """The resolvent parameter search hit its cap before the gradient bound held."""


class NoConvergence(LevyLabError):
    """A fixed-point inversion failed to converge."""


class ConfigError(LevyLabError):
    """Malformed experiment configuration."""
