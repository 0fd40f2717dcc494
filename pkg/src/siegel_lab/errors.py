"""Exception hierarchy shared by all modules.

Two roots matter for the CLI exit-code contract: ``InputError`` (bad user
input, exit 2) and ``NumericalDefectAlarm`` (a mathematically impossible
result was computed, exit 3).  Everything else is an ordinary failure of a
documented precondition.
"""


class SiegelLabError(Exception):
    """Base class for all errors raised by this package."""


class InputError(SiegelLabError):
    """Invalid user-supplied input (CLI exit code 2)."""


class NumericalDefectAlarm(SiegelLabError):
    """A result violates an exact mathematical invariant (CLI exit code 3)."""


# --- rotation ---------------------------------------------------------------

class RationalDetected(SiegelLabError):
    """The remainder became exactly zero: the number is rational at working precision."""

    def __init__(self, message, quotients=()):
        super().__init__(message)
        self.quotients = tuple(quotients)


class PrecisionExhausted(SiegelLabError):
    """A floor could not be certified at the available precision."""


class InsufficientTerms(SiegelLabError):
    """The expansion does not carry enough convergents for the request."""


class QuotientOverflow(SiegelLabError):
    """Requested quotients exceed the configured big-integer limits."""


# --- famalg -----------------------------------------------------------------

class BasePointMismatch(SiegelLabError):
    """Constant term of the inner family does not match the outer base point."""


class DegenerateLinearPart(SiegelLabError):
    """A composition factor has vanishing linear part; no convention is guessed."""


class NotEssentiallyQuadratic(SiegelLabError):
    """Operation requires an essentially quadratic family."""


class NonzeroBasePoint(SiegelLabError):
    """Operation requires a family based at the origin with fixed point 0."""


class DegenerateSecondCoefficient(SiegelLabError):
    """The coefficient targeted by normalization vanishes."""


# --- linearizer -------------------------------------------------------------

class SmallDivisorUnderflow(SiegelLabError):
    """|lambda^k - lambda| fell below the certified floor."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class ParabolicMultiplier(SiegelLabError):
    """The multiplier is a root of unity; no formal linearization exists."""

    def __init__(self, message, s=None, t=None):
        super().__init__(message)
        self.s = s
        self.t = t


class NonContracting(SiegelLabError):
    """Koenigs iteration requires 0 < |lambda| < 1."""


# --- polydyn ----------------------------------------------------------------

class DegreeTooLow(SiegelLabError):
    """Polynomial degree below the operation's minimum."""


class RootCapExceeded(SiegelLabError):
    """d**q exceeds the configured root cap for cycle finding."""


class MissingParabolicData(SiegelLabError):
    """Cycle weight of a parabolic cycle needs its petal count."""


class ExpansionOrderExceeded(SiegelLabError):
    """No nonvanishing coefficient found below the expansion cap."""


class DivisibilityViolation(NumericalDefectAlarm):
    """Tangency order not divisible by the multiplier denominator."""


# --- perturb ----------------------------------------------------------------

class PointCollision(SiegelLabError):
    """A distinguished representative collides with another construction point."""


class InvalidN(SiegelLabError):
    """Vanishing order must exceed the degree and every tangency index."""


class ClassificationViolation(NumericalDefectAlarm):
    """A constructed family violates its guaranteed degree class."""
