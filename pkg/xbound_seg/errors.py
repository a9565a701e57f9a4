"""
Exceptions raised by the xbound_seg library.
"""


class ShapeError(ValueError):
    """Array or tensor shapes do not satisfy an operation's contract."""


class DimensionError(ShapeError):
    """Spatial dimensions are not divisible as an operation requires."""


class NumericError(ArithmeticError):
    """Non-finite values reached an operation that requires finite input."""


class ConfigMismatchError(ValueError):
    """A checkpoint was written with a different model config."""


class CheckpointError(ValueError):
    """A checkpoint file is not a readable XBF container."""


class ConfigFileError(ValueError):
    """A plain-text config file or override could not be parsed."""
