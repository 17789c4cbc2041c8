"""
Exceptions raised by swipeauth operations.
"""

from typing import Optional


class SwipeAuthError(Exception):
    pass


class EmptyStream(SwipeAuthError):
    pass


class MissingColumn(SwipeAuthError):
    def __init__(self, column, path: Optional[str] = None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"Column {column!r} not found{where}")


class ParseError(SwipeAuthError):
    def __init__(self, row: int, field: str, value=None, path: Optional[str] = None):
        self.row = row
        self.field = field
        self.value = value
        where = f" ({path})" if path else ""
        super().__init__(f"Cannot parse field '{field}' at row {row}: {value!r}{where}")


class LabelMissing(SwipeAuthError):
    pass


class InvalidConfig(SwipeAuthError):
    pass


class InvalidDataset(SwipeAuthError):
    pass


class InsufficientFeatures(SwipeAuthError):
    pass


class TooFewPoints(SwipeAuthError):
    pass


class EmptyScores(SwipeAuthError):
    pass


class DegenerateData(SwipeAuthError):
    pass


class ModelFormatError(SwipeAuthError):
    pass
