"""Exception hierarchy.

Data problems (bad inputs, impossible index arithmetic) derive from
:class:`DataError`; numerical failures from :class:`NumericalError`.  The CLI
maps the two families onto distinct exit codes.
"""


class DgcmError(Exception):
    """Base class for every error raised by this package."""


class DataError(DgcmError, ValueError):
    pass


class NumericalError(DgcmError, ArithmeticError):
    pass


class EmptyRange(DataError):
    pass


class OutOfRange(DataError, IndexError):
    pass


class DomainError(DataError):
    pass


class MissingFit(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class WindowTooLarge(DataError):
    pass


class InvalidCandidates(DataError):
    pass


class RangeTooSmall(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(loc)})" if loc else message)
        self.row = row
        self.column = column


class NonPositivePrice(ParseError):
    pass


class AllMissingSeries(DataError):
    pass


class RankDeficient(NumericalError):
    pass


class Underdetermined(NumericalError):
    pass


class InsufficientData(NumericalError):
    pass


class FoldTooSmall(UserWarning):
    """Warning emitted when a cross-validation candidate cannot be fit."""
