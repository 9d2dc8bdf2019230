"""Exception types shared across the package.

Everything derives from ``ValueError`` so callers that do not care about
the distinction can catch the builtin; the CLI maps :class:`PcaWaldError`
to exit code 2.
"""


class PcaWaldError(ValueError):
    """Base class for precondition violations raised by this package."""


class SingleClusterError(PcaWaldError):
    """Spectral gap / resolvent requested for a model with one eigenvalue cluster."""


class SingularCovarianceError(PcaWaldError):
    """Empirical covariance not invertible (smallest eigenvalue at or below the
    positive-definiteness floor), so the plug-in operator cannot be assembled."""


class ConfigError(PcaWaldError):
    """Experiment configuration rejected before any replication ran."""
