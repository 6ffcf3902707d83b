"""Exception types raised across the package."""


class OASamplingError(ValueError):
    """Base class for all domain errors."""


class NonPrimeQ(OASamplingError):
    pass


class DimensionTooLarge(OASamplingError):
    pass


class DimensionTooSmall(OASamplingError):
    pass


class StrengthExceedsDimension(OASamplingError):
    pass


class ZeroLength(OASamplingError):
    pass


class WrongStage(OASamplingError):
    pass


class WrongStrength(OASamplingError):
    pass


class BadBinCount(OASamplingError):
    pass


class IndexOutOfRange(OASamplingError):
    pass


class GridMisaligned(OASamplingError):
    pass


class TruncationExceeded(OASamplingError):
    pass


class DimensionMismatch(OASamplingError):
    pass


class TooFewValues(OASamplingError):
    pass


class DegenerateVariance(OASamplingError):
    pass


class InsufficientReplicates(OASamplingError):
    pass


class ConfigError(OASamplingError):
    pass


class UnknownIntegrand(OASamplingError):
    pass
