"""Exception types raised by the whitney package.

Each exception carries an ``exit_code`` used by the command-line front end:
1 for usage problems, 2 for data/format problems, 3 for numerical failures.
"""


class WhitneyError(Exception):
    exit_code = 3


class UsageError(WhitneyError):
    exit_code = 1


class DataError(WhitneyError, ValueError):
    """Input data is malformed or inconsistent."""

    exit_code = 2


class NumericalError(WhitneyError, ArithmeticError):
    exit_code = 3


# geometry
class BadShape(DataError):
    pass


class NotOrthonormal(NumericalError):
    pass


class BaseMismatch(DataError):
    pass


class SVDFailure(NumericalError):
    pass


class CountTooLarge(DataError):
    pass


class RankDeficient(NumericalError):
    pass


# secants and objective
class ZeroVector(NumericalError):
    pass


class NotUnit(DataError):
    pass


class TooFewPoints(DataError):
    pass


class EmptySecantSet(DataError):
    pass


class TooFewSecants(DataError):
    pass


class NegativeDimension(DataError):
    pass


# classification
class NoModels(DataError):
    pass


class UnknownLabel(DataError):
    pass


class EmptyTestSet(DataError):
    pass


# file formats
class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class RaggedRows(DataError):
    pass


class BadMagic(DataError):
    pass


class CountMismatch(DataError):
    pass


class TruncatedFile(DataError):
    pass


class VersionMismatch(DataError):
    pass


class CorruptFrame(DataError):
    pass
