"""Exception types shared across the package."""


class HetsecError(Exception):
    """Base class for package errors."""


class ConfigurationError(HetsecError, ValueError):
    """Invalid configuration values or impossible geometry."""


class DegenerateChannelError(HetsecError, ValueError):
    """Channel realization unusable (zero direct or eavesdropper gain)."""


class ConvergenceError(HetsecError, RuntimeError):
    """An iterative routine exhausted its iteration budget."""


class InfeasibleRateError(HetsecError, ValueError):
    """Requested rate vector admits no nonnegative in-cap power vector."""


class SearchSpaceError(HetsecError, ValueError):
    """Exhaustive enumeration would exceed the configured cap."""
