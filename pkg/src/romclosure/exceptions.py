"""Exception hierarchy shared by all modules."""


class RomClosureError(Exception):
    """Base class for errors raised by romclosure."""


class DomainError(RomClosureError, ValueError):
    """An argument lies outside the domain of an operation."""


class RankError(DomainError):
    """The snapshot matrix cannot support the requested number of modes."""

    def __init__(self, requested, achievable):
        self.requested = requested
        self.achievable = achievable
        super().__init__(
            f"requested {requested} POD modes but the snapshot matrix has "
            f"numerical rank {achievable}"
        )


class ConfigurationError(RomClosureError, ValueError):
    """Inconsistent or incomplete configuration."""


class UsageError(RomClosureError, RuntimeError):
    """An object was used in a state that does not allow the call."""


class DivergenceError(RomClosureError, ArithmeticError):
    """Time integration blew up (non-finite or exceeding the guard)."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"integration diverged at step {step}")
