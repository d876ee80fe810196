"""Exception hierarchy shared across the package."""


class AdeposError(Exception):
    """Base class for every error raised by this package."""


class DegenerateWindow(AdeposError, ValueError):
    pass


class EmptyTrainingSet(AdeposError, ValueError):
    pass


class InvalidDimension(AdeposError, ValueError):
    pass


class DimensionMismatch(AdeposError, ValueError):
    pass


class NonFiniteUpdate(AdeposError, ArithmeticError):
    pass


class AccumulatorOverflow(AdeposError, OverflowError):
    pass


class FixedPointRangeError(AdeposError, ValueError):
    """Weights do not fit the 16-bit signed range under the chosen scale."""


class EvenOrEmptyPanel(AdeposError, ValueError):
    pass


class NonFiniteResidual(AdeposError, ArithmeticError):
    pass


class InsufficientData(AdeposError, ValueError):
    pass


class ZeroTrainingNoise(AdeposError, ValueError):
    pass


class EmptyGroup(AdeposError, ValueError):
    pass


class InvalidEfficiency(AdeposError, ValueError):
    pass


class InvalidParams(AdeposError, ValueError):
    pass


class NonPositiveDenominator(AdeposError, ValueError):
    pass


class InvalidCircuitParams(AdeposError, ValueError):
    pass


class ParseError(AdeposError, ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class ShapeError(AdeposError, ValueError):
    pass


class MappingError(AdeposError, ValueError):
    pass


class MissingColumn(AdeposError, ValueError):
    pass


class InvalidSpec(AdeposError, ValueError):
    pass


class ConfigError(AdeposError, ValueError):
    pass


class FormatError(AdeposError, ValueError):
    """A serialized document has an unknown version or malformed fields."""
