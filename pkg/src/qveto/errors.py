"""Exception types shared across the package."""


class RejectedInput(ValueError):
    """Input violates an operation's precondition (wrong dimension, bad range, ...)."""


class InsufficientData(RuntimeError):
    """Not enough sifted runs to reach a decision."""


class ProtocolAbort(RuntimeError):
    """A protocol loop gave up (e.g. infrastructure attempts exhausted)."""


class NotSifted(ValueError):
    """Tally requested on a run whose sender and receiver bases differ."""


class Inconclusive(RuntimeError):
    """No usable voting run was found."""


class ReportWriteError(OSError):
    """Writing a report or transcript failed."""
