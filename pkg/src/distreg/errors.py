"""Exception types shared across the package."""


class DistregError(Exception):
    """Base class for every error raised by this package."""


class InvalidBinWidth(DistregError, ValueError):
    pass


class EmptyRange(DistregError, ValueError):
    pass


class InvalidLabel(DistregError, ValueError):
    pass


class EmptyDataset(DistregError, ValueError):
    pass


class InvalidBandwidth(DistregError, ValueError):
    pass


class InvalidSampleCount(DistregError, ValueError):
    pass


class FrequencySumMismatch(DistregError, ValueError):
    pass


class InvalidFrequency(DistregError, ValueError):
    pass


class EmptySample(DistregError, ValueError):
    pass


class InvalidInput(DistregError, ValueError):
    pass


class ShapeMismatch(DistregError, ValueError):
    pass


class InvalidWeight(DistregError, ValueError):
    pass


class InvalidTape(DistregError, RuntimeError):
    pass


class NonFiniteGradient(DistregError, ArithmeticError):
    pass


class InvalidSpec(DistregError, ValueError):
    pass


class ParseError(DistregError, ValueError):
    pass


class EmptyRegion(DistregError, ValueError):
    pass


class EmptyHistogram(DistregError, ValueError):
    pass


class UnsupportedFormat(DistregError, ValueError):
    pass


class ConfigError(DistregError, ValueError):
    pass
