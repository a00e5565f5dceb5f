"""Exception hierarchy shared by all modules."""


class HardyLabError(Exception):
    """Base class for every error raised by this package."""

    #: machine-readable category used by the CLI
    category = "error"


class ArgumentError(HardyLabError, ValueError):
    category = "argument"


class DomainError(HardyLabError, ValueError):
    """A weight or field was evaluated outside its domain."""

    category = "domain"


class InitializationError(HardyLabError):
    category = "initialization"


class DivergenceError(HardyLabError):
    """Non-finite energy during an iteration.

    ``report`` holds the last good iterate when one exists.
    """

    category = "divergence"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class PicardError(HardyLabError):
    """Lagged-coefficient iteration failed to converge (or lost definiteness)."""

    category = "picard"


class BracketError(HardyLabError):
    category = "bracket"

    def __init__(self, message, lo_status=None, hi_status=None):
        super().__init__(message)
        self.lo_status = lo_status
        self.hi_status = hi_status
