"""Price series ingestion and conversion to/from logarithmic returns."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "PriceSeries",
    "ReturnsSeries",
    "parse_price_csv",
    "compute_returns",
    "reconstruct_prices",
]


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Ordered, strictly positive price quotes indexed by quote counter."""

    quotes: np.ndarray

    def __post_init__(self):
        quotes = np.asarray(self.quotes, dtype=float)
        if quotes.ndim != 1 or quotes.size == 0:
            raise ValueError("quotes must be a non-empty 1-D sequence")
        if not np.isfinite(quotes).all():
            raise ValueError("quotes must be finite")
        if (quotes <= 0).any():
            raise ValueError("quotes must be strictly positive")
        object.__setattr__(self, "quotes", quotes)

    @property
    def origin_price(self) -> float:
        """Price at index 0, the anchor for reconstruction from returns."""
        return float(self.quotes[0])

    def __len__(self) -> int:
        return int(self.quotes.size)


@dataclass(frozen=True, eq=False)
class ReturnsSeries:
    """Ordered dimensionless log-returns between consecutive quotes."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a non-empty 1-D sequence")
        if not np.isfinite(values).all():
            raise ValueError("returns must be finite")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


def parse_price_csv(source, column: int | str = 0) -> PriceSeries:
    """Parse one price column from delimiter-separated text.

    Parameters
    ----------
    source : text stream
        Comma- or tab-separated rows (delimiter auto-detected from the first
        non-empty line). An optional header row is detected by a non-numeric
        first row. Blank lines are skipped; all other columns are ignored.
    column : int or str
        Zero-based column index, or a header name (requires a header row).

    Returns
    -------
    PriceSeries with quotes in file order.

    Raises
    ------
    InputError if any selected field is missing, non-numeric, non-positive or
    non-finite (the message names the offending 1-based file row), or if
    fewer than 2 price rows remain.
    """
    lines = source.read().splitlines()
    numbered = [(i, line) for i, line in enumerate(lines, start=1) if line.strip()]
    if not numbered:
        raise InputError("series too short: need at least 2 price rows")

    first_line = numbered[0][1]
    delimiter = "\t" if "\t" in first_line else ","

    def fields_of(line: str) -> list[str]:
        return next(csv.reader([line], delimiter=delimiter))

    first_fields = [f.strip() for f in fields_of(first_line)]
    data_rows = numbered
    if isinstance(column, str):
        matches = [i for i, name in enumerate(first_fields) if name == column]
        if not matches:
            matches = [
                i for i, name in enumerate(first_fields)
                if name.casefold() == column.casefold()
            ]
        if not matches:
            raise InputError(
                f"column {column!r} not found in header {first_fields}"
            )
        col = matches[0]
        data_rows = numbered[1:]
    else:
        col = int(column)
        if col < 0:
            raise InputError("column index must be non-negative")
        try:
            float(first_fields[col])
        except (ValueError, IndexError):
            data_rows = numbered[1:]  # non-numeric first row: header

    quotes = []
    for rownum, line in data_rows:
        fields = fields_of(line)
        if col >= len(fields):
            raise InputError(f"row {rownum}: missing column {col}")
        field = fields[col].strip()
        try:
            value = float(field)
        except ValueError:
            raise InputError(f"row {rownum}: cannot parse price from {field!r}")
        if not math.isfinite(value) or value <= 0:
            raise InputError(f"row {rownum}: price must be positive (got {field!r})")
        quotes.append(value)

    if len(quotes) < 2:
        raise InputError("series too short: need at least 2 price rows")
    return PriceSeries(np.array(quotes))


def compute_returns(prices: PriceSeries) -> ReturnsSeries:
    """Log-returns between consecutive quotes: ln(p[i] / p[i-1])."""
    if len(prices) < 2:
        raise ValueError("need at least 2 prices to compute returns")
    quotes = prices.quotes
    return ReturnsSeries(np.log(quotes[1:] / quotes[:-1]))


def reconstruct_prices(returns: ReturnsSeries, origin: float) -> PriceSeries:
    """Rebuild the price series from returns via p[i] = p[i-1] * exp(r[i]).

    Inverse of :func:`compute_returns` up to floating-point round-off, given
    the same origin price.
    """
    if not (math.isfinite(origin) and origin > 0):
        raise ValueError("origin price must be positive and finite")
    values = returns.values
    quotes = np.empty(values.size + 1)
    quotes[0] = origin
    quotes[1:] = origin * np.exp(np.cumsum(values))
    return PriceSeries(quotes)
