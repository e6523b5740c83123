"""Exception and warning types raised across the package."""


class FQGateError(Exception):
    """Base class for all package errors."""


class ValidationError(FQGateError, ValueError):
    """A record violates a data-model invariant."""


class DegenerateBox(ValidationError):
    pass


class KeypointOutsideBox(ValidationError):
    pass


class NonFiniteValue(ValidationError):
    pass


class DuplicateSampleId(ValidationError):
    pass


class TooFewSamples(FQGateError):
    pass


class UnlabeledSample(FQGateError):
    pass


class SingleClassTrainingSet(FQGateError):
    pass


class MissingLandmarks(FQGateError):
    pass


class MissingEmbedding(FQGateError):
    pass


class UnknownSubject(FQGateError):
    pass


class DimensionMismatch(FQGateError, ValueError):
    pass


class ZeroNormEmbedding(FQGateError, ValueError):
    pass


class EmptyNode(FQGateError, ValueError):
    pass


class FeatureOrderMismatch(FQGateError):
    pass


class FormatVersionMismatch(FQGateError):
    pass


class CorruptModelFile(FQGateError):
    pass


class InvalidConfig(FQGateError, ValueError):
    pass


class SchemaError(FQGateError):
    """A dataset, gallery or config file does not match its schema.

    ``line`` is the 1-based line number for JSONL input, else ``None``.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceWarning(UserWarning):
    """Training hit its iteration cap; the best-so-far model was returned."""
