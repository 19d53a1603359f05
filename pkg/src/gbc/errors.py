"""Exception hierarchy.

Validation problems (bad input, violated preconditions) derive from
:class:`ValidationError`; failures of the numerics themselves derive from
:class:`NumericError`.  The CLI maps the two families to exit codes 2 and 3.
"""


class GbcError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(GbcError, ValueError):
    pass


class NumericError(GbcError, ArithmeticError):
    pass


# shift space
class NotTransitive(ValidationError):
    pass


class Periodic(NotTransitive):
    """Irreducible but periodic matrix: no power is strictly positive."""


class ZeroRowOrColumn(ValidationError):
    pass


class LengthTooLarge(ValidationError):
    pass


class InadmissibleWord(ValidationError):
    pass


class InvalidInterval(ValidationError):
    pass


# gibbs
class BlowUp(ValidationError):
    pass


class InvalidPotential(ValidationError):
    pass


class NoConvergence(NumericError):
    pass


class InsufficientSamples(ValidationError):
    pass


# sequences / correlation sums
class LengthMismatch(ValidationError):
    pass


class NotMonotone(ValidationError):
    pass


class EpsOutOfRange(ValidationError):
    pass


class DivergentBase(ValidationError):
    pass


class ZeroMassWindow(ValidationError):
    pass


class WindowTooLarge(ValidationError):
    pass


# simulation
class MassTooSmall(ValidationError):
    pass


# torus / baker
class NotUnimodular(ValidationError):
    pass


class NotHyperbolic(ValidationError):
    pass


class GapTooNarrow(ValidationError):
    pass


class RectangleTooLarge(ValidationError):
    pass


class BallOutOfRange(ValidationError):
    pass


class Overflow(NumericError):
    pass


class ConfigError(ValidationError):
    pass
