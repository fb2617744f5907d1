"""Exception taxonomy shared across the package.

Two broad categories matter to callers: configuration problems (the
request itself is wrong) and data problems (the request is fine but the
supplied data cannot support it). Everything else is an internal fault.
The service layer maps these onto HTTP statuses and the CLI onto exit
codes, so new exceptions should subclass one of the two roots.
"""


class DsrcSenseError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DsrcSenseError):
    """A parameter or configuration value is invalid."""


class GeometryError(ConfigurationError):
    """Scene geometry is degenerate (e.g. transmitter equals receiver)."""


class ParameterError(ConfigurationError):
    """A numeric parameter violates its precondition."""


class TruncationError(ConfigurationError):
    """A modeled path delay falls outside the channel tap window."""


class DataError(DsrcSenseError):
    """Supplied data cannot support the requested operation."""


class ShapeError(DataError):
    """Array dimensions do not match."""


class StratificationError(DataError):
    """A dataset cannot be split into the requested folds."""


class MetricUndefinedError(DataError):
    """A metric has no defined value for the given inputs."""


class EstimationError(DataError):
    """A channel estimate cannot be computed (e.g. rank-deficient system)."""
