"""Exception hierarchy shared by every stage of the pipeline."""


class PerceptError(Exception):
    """Base class for all errors raised by perceptxai."""


# image I/O
class MissingFile(PerceptError, FileNotFoundError):
    pass


class MalformedPng(PerceptError, ValueError):
    pass


class UnsupportedFormat(PerceptError, ValueError):
    pass


class IoFailure(PerceptError, OSError):
    pass


# shape / argument validation
class DimensionTooSmall(PerceptError, ValueError):
    pass


class DimensionMismatch(PerceptError, ValueError):
    pass


class UnnormalizedHeatmap(PerceptError, ValueError):
    pass


class BadFactor(PerceptError, ValueError):
    pass


class BadPeriod(PerceptError, ValueError):
    pass


class SquareTooLarge(PerceptError, ValueError):
    pass


class InvalidConfig(PerceptError, ValueError):
    pass


class BadParams(PerceptError, ValueError):
    pass


class BadBand(PerceptError, ValueError):
    pass


class EmptyBin(PerceptError, AssertionError):
    pass


class BadPatchSize(PerceptError, ValueError):
    pass


# models
class IncompatibleSpec(PerceptError, ValueError):
    pass


class EmptyClass(PerceptError, ValueError):
    pass


class EmptySplit(PerceptError, ValueError):
    pass


class NonFiniteLoss(PerceptError, ArithmeticError):
    """Training diverged; usually the learning rate is too high."""


class CueAbsent(PerceptError, ValueError):
    pass


class NotPatchModel(PerceptError, TypeError):
    pass


# cli
class ConfigInvalid(PerceptError, ValueError):
    def __init__(self, message, pointer=""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


class StageDependencyMissing(PerceptError, RuntimeError):
    pass


class BadFraction(PerceptError, ValueError):
    pass


class InvalidImage(PerceptError, ValueError):
    pass
