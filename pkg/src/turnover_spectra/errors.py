"""Exception and warning types shared across the package."""

from __future__ import annotations

from typing import Iterable


class TurnoverSpectraError(Exception):
    """Base class for all package-specific errors."""


class PanelFormatError(TurnoverSpectraError):
    """Malformed tabular input (ragged row, bad cell, duplicate header)."""

    def __init__(self, message: str, *, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class RejectedSeriesError(TurnoverSpectraError):
    """Series with fewer than two observations are unusable and rejected."""

    def __init__(self, ids: Iterable[str]):
        self.ids = tuple(ids)
        super().__init__(
            "series with fewer than 2 observations: " + ", ".join(self.ids)
        )


class DegenerateSeriesError(TurnoverSpectraError):
    """Zero sample variance somewhere, so a correlation is undefined."""

    def __init__(self, ids: Iterable[str], note: str = "zero sample variance"):
        self.ids = tuple(ids)
        super().__init__(f"{note}: " + ", ".join(self.ids))


class CoverageError(TurnoverSpectraError):
    """Too few joint observations to estimate the requested quantity."""


class CollinearFactorsError(TurnoverSpectraError):
    """Regression design matrix is rank deficient."""


class InvalidMatrixError(TurnoverSpectraError):
    """Matrix input violates a structural precondition (finite, symmetric)."""


class InvalidDiagonalError(InvalidMatrixError):
    """Diagonal entries must be strictly positive for repair."""


class IllDefinedVolatilityError(TurnoverSpectraError):
    """Quadratic form is indefinite; volatility has no real value."""


class CalibrationError(TurnoverSpectraError):
    """Single-alpha calibration system is singular or ill-conditioned."""


class UndefinedRegressorError(TurnoverSpectraError):
    """Through-origin regression needs a regressor with nonzero norm."""


class DegenerateTopWarning(UserWarning):
    """Leading eigenvalue is not isolated; leading-eigenvector quantities
    depend on an arbitrary basis choice."""
