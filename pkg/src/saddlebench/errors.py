"""Exception types shared across the package."""


class SaddleBenchError(Exception):
    """Base class for all saddlebench errors."""


class DegenerateDirectionError(SaddleBenchError):
    """A search or basis direction is zero (or numerically zero)."""


class SingularSubspaceError(SaddleBenchError):
    """The subspace Newton system stayed singular after all damping retries."""


class NoUniqueSolutionError(SaddleBenchError):
    """The stationarity system of a problem instance is singular."""


class UndefinedMetricError(SaddleBenchError):
    """A metric was requested on a trace too short to define it."""


class ConfigError(SaddleBenchError):
    """Invalid experiment configuration."""
