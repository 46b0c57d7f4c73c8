"""Exception types shared across the simulator."""


class StarqnetError(Exception):
    """Base class for all simulator errors."""


class PastTimeError(StarqnetError):
    """An event was scheduled before the current simulated time."""


class BadProbabilityError(StarqnetError, ValueError):
    """A probability parameter fell outside [0, 1]."""


class UnsupportedWidthError(StarqnetError, ValueError):
    """Requested qubit count outside the supported range."""


class AlreadyMeasuredError(StarqnetError):
    """A qubit was measured twice."""


class UnsupportedPatternError(StarqnetError):
    """The trajectory backend cannot represent this circuit; use the dense backend."""


class TopologyError(StarqnetError):
    """Protocol participants do not fit the network topology."""


class ParseError(StarqnetError):
    """Configuration text could not be parsed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(StarqnetError):
    """A configuration or argument violated an invariant."""


class EmptyKeyError(StarqnetError):
    """QBER requested on an empty sifted key."""


class MalformedChainError(StarqnetError):
    """An oracle chain is missing its source or terminal detector."""


class NoDeliveredRoundsError(StarqnetError):
    """GHZ error rate requested with no fully delivered rounds."""


class BadBudgetError(StarqnetError):
    """Verification budget parameters imply a usage probability above 1."""
