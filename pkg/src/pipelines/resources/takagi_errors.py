class TakagiError(Exception):
    """Base class for every expected failure; carries the process exit code."""
    exit_code = 1


class InvalidInputError(TakagiError, ValueError):
    """Input outside the domain of an operation (x not in [0,1], bad rational, ...)."""
    exit_code = 3


class ConfigError(TakagiError):
    """Missing or malformed configuration."""
    exit_code = 4


class ResourceLimitError(TakagiError):
    """A grid or a cell set would exceed the configured memory cap / cell budget."""
    exit_code = 5


class InfiniteEtaError(TakagiError):
    """The sequence has sup_k b^k|c_k| = infinity, so the strip-based bounds do not apply."""
    exit_code = 6


class InsufficientDataError(TakagiError):
    """Not enough points to fit a slope."""
    exit_code = 7
