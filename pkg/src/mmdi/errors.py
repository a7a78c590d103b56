"""Exception types shared across the package."""


class MMDIError(Exception):
    """Base class for errors raised by :mod:`mmdi`."""


class DomainError(MMDIError, ValueError):
    """A point lies outside the domain of an operator."""


class InfeasibleSetError(MMDIError, ValueError):
    """A polytope description has no feasible point."""


class ResolventError(MMDIError, RuntimeError):
    """An iterative resolvent evaluation did not converge.

    Attributes
    ----------
    residual : float
        Best membership residual reached before giving up.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InadmissibleError(MMDIError, ValueError):
    """Initial data outside the admissible set."""


class StepSizeError(MMDIError, ValueError):
    """Step violates the restriction ``h * c1 < 1/2``."""


class SolverError(MMDIError, RuntimeError):
    """A run failed part-way; the valid prefix is kept on the exception."""

    def __init__(self, message, last_index, trajectory=None):
        super().__init__(message)
        self.last_index = last_index
        self.trajectory = trajectory


class EmptyVelocitySetError(MMDIError, ValueError):
    """The truncated velocity set is empty within the requested radius."""


class ConfigError(MMDIError, ValueError):
    """Invalid scenario configuration; the message names the offending key."""
