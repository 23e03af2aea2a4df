"""Exception taxonomy.

Two branches matter to callers: ``ValidationError`` (bad input, CLI exit
code 1) and ``RuntimeFailure`` (something went wrong while computing,
CLI exit code 2).
"""


class NemesysError(Exception):
    pass


class ValidationError(NemesysError):
    pass


class RuntimeFailure(NemesysError):
    pass


# scenario / simulator
class MalformedConfig(ValidationError):
    pass


class UnroutedEventKind(ValidationError):
    pass


class UnknownProfileKind(ValidationError):
    pass


class NonMonotoneArrivals(ValidationError):
    pass


# attack injection
class UnknownUE(ValidationError):
    pass


class WindowOutOfHorizon(ValidationError):
    pass


class PeriodTooShort(ValidationError):
    pass


# feature extraction
class UnorderedStream(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class SeriesTooShort(ValidationError):
    pass


# detection
class NonPositiveObservation(ValidationError):
    pass


class InsufficientSamples(ValidationError):
    pass


class MixedScopes(ValidationError):
    pass


class NoConvergence(RuntimeFailure):
    pass


class UnstableNetwork(RuntimeFailure):
    pass


class DivergedTraining(RuntimeFailure):
    pass


# data collection infrastructure
class SchemaViolation(ValidationError):
    pass


class UnorderedFeed(ValidationError):
    def __init__(self, feed_name: str, message: str = ""):
        self.feed_name = feed_name
        super().__init__(message or f"feed {feed_name!r} is not time-ordered")


class DimensionMismatch(ValidationError):
    pass


class BadK(ValidationError):
    pass


class MalformedFilter(ValidationError):
    pass


class StorageFailure(RuntimeFailure):
    pass


# honeynode
class BadWeights(ValidationError):
    pass


class NodeMismatch(ValidationError):
    pass
