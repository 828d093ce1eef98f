"""Exception hierarchy shared by all simulator modules."""


class RydfmError(Exception):
    """Base class for every error raised by this package."""


# --- configuration / input errors ------------------------------------------

class ParseError(RydfmError):
    """Scenario text could not be parsed; message carries the line number."""


class UnknownKeyError(ParseError):
    """A scenario section or key is not part of the documented grammar."""


class InvariantViolation(RydfmError, ValueError):
    """A domain-type invariant failed (bad sign, bad range, bad shape)."""


# --- numeric / physics errors ----------------------------------------------

class SingularSystemError(RydfmError):
    """The steady-state linear system is degenerate (e.g. all rates zero)."""


class NonConvergenceError(RydfmError):
    """An iterative or quadrature result did not converge to tolerance."""


class TruncationError(RydfmError):
    """Sideband order cutoff loses more optical power than allowed."""


class OutOfGridError(RydfmError):
    """A sideband falls outside the scanned detuning grid."""


class EvenHarmonicError(RydfmError):
    """The residual-AM photocurrent formula only applies to odd harmonics."""


class UnsupportedKindError(RydfmError):
    """Requested noise kind is not one of the synthesizable power laws."""


class InsufficientDataError(RydfmError):
    """Too few averaging bins for the requested Allan sampling time."""


class KernelTooNarrowError(RydfmError):
    """Matched-filter kernel is narrower than two grid steps."""


class DomainError(RydfmError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class ZeroResponsivityError(RydfmError):
    """The signal derivative vanishes; sensitivity is undefined."""


class UnstableLoopError(RydfmError):
    """Servo error amplitude grew by more than 10x; gains are unstable."""


CONFIG_ERRORS = (ParseError, UnknownKeyError, InvariantViolation)

NUMERIC_ERRORS = (
    SingularSystemError,
    NonConvergenceError,
    TruncationError,
    OutOfGridError,
    EvenHarmonicError,
    UnsupportedKindError,
    InsufficientDataError,
    KernelTooNarrowError,
    DomainError,
    ZeroResponsivityError,
    UnstableLoopError,
)
