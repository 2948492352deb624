"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` (bad input, bad
config, bad files) and :class:`NumericError` (NaN/Inf during computation).
The CLI maps them to exit codes 1 and 2.
"""


class AgarError(Exception):
    pass


class ValidationError(AgarError, ValueError):
    pass


class NumericError(AgarError, ArithmeticError):
    pass


class DimensionError(ValidationError):
    pass


class EmptyNeighborhoodError(ValidationError):
    pass


class EmptyReferenceError(ValidationError):
    pass


class CountError(ValidationError):
    pass


class CardinalityError(ValidationError):
    pass


class ScaleError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class FormatError(ValidationError):
    pass


class CheckpointError(ValidationError):
    pass
