"""Exception hierarchy.

Data problems and numerical problems are kept apart so the CLI can map them
to distinct exit codes.
"""


class SpectralMomError(Exception):
    """Base class for every error raised by this package."""


class DataError(SpectralMomError, ValueError):
    pass


class NumericalError(SpectralMomError, ArithmeticError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyCorpusError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class ModelFormatError(DataError):
    pass


class DegenerateMomentError(NumericalError):
    pass


class RankDeficiencyError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class DecompositionError(NumericalError):
    pass


class DegenerateTopicError(NumericalError):
    def __init__(self, message, topic=None):
        self.topic = topic
        super().__init__(message)
