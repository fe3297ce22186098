"""Typed in-memory data frames and strict CSV ingestion.

A :class:`DataFrame` holds named columns that are either numeric or
categorical. Cells equal to ``NA`` or the empty string are missing; no
other markers are recognized. Frames are immutable once built and safe
to share across threads.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

MISSING_MARKERS = frozenset({"", "NA"})

NUMERIC = "numeric"
CATEGORICAL = "categorical"


def _parse_numeric(cell: str) -> float | None:
    """Return the finite float value of *cell*, or None if it has none."""
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class Column:
    """One column of a frame.

    Numeric columns store float64 values with NaN in missing cells;
    categorical columns store the observed strings. ``missing`` flags
    missing cells in either case.
    """

    kind: str
    values: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"unknown column kind {self.kind!r}")
        if len(self.values) != len(self.missing):
            raise DataError("values and missing mask differ in length")

    def __len__(self) -> int:
        return len(self.values)

    def levels(self) -> list[str]:
        """Sorted distinct observed strings of a categorical column."""
        if self.kind != CATEGORICAL:
            raise DataError("levels are defined for categorical columns only")
        observed = {str(v) for v, miss in zip(self.values, self.missing) if not miss}
        return sorted(observed)


def numeric_column(values) -> Column:
    """Build a numeric column; None or NaN cells are missing."""
    data = np.array([math.nan if v is None else float(v) for v in values], dtype=float)
    return Column(NUMERIC, data, np.isnan(data))


def categorical_column(values) -> Column:
    """Build a categorical column; None cells are missing."""
    missing = np.array([v is None for v in values], dtype=bool)
    data = np.array(["" if v is None else str(v) for v in values], dtype=object)
    return Column(CATEGORICAL, data, missing)


@dataclass(frozen=True)
class DataFrame:
    """Immutable collection of equally long, uniquely named columns."""

    columns: dict[str, Column]
    row_count: int = field(default=-1)

    def __post_init__(self):
        lengths = {len(col) for col in self.columns.values()}
        if len(lengths) > 1:
            raise DataError("columns differ in length")
        count = lengths.pop() if lengths else 0
        if self.row_count == -1:
            object.__setattr__(self, "row_count", count)
        elif self.row_count != count:
            raise DataError("row_count does not match column lengths")

    def __getitem__(self, name: str) -> Column:
        try:
            return self.columns[name]
        except KeyError:
            raise DataError(f"no column named {name!r}") from None

    def column_names(self) -> list[str]:
        return list(self.columns)


def frame_from_dict(data: dict[str, list]) -> DataFrame:
    """Convenience constructor inferring column kinds from cell types.

    A column becomes numeric when every non-None cell is an int or
    float; anything else becomes categorical.
    """
    columns: dict[str, Column] = {}
    for name, values in data.items():
        cells = [v for v in values if v is not None]
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in cells):
            columns[name] = numeric_column(values)
        else:
            columns[name] = categorical_column(values)
    return DataFrame(columns)


def read_csv(path: str, type_hints: dict[str, str] | None = None) -> DataFrame:
    """Read an RFC-4180 CSV file with a header row into a DataFrame.

    Without hints a column is numeric iff every non-missing cell parses
    as a finite real number; otherwise it is categorical. ``type_hints``
    maps column names to ``"numeric"`` or ``"categorical"`` and
    overrides the inference. Only UTF-8 text and comma delimiters are
    accepted; ``NA`` and the empty string are the missing markers.
    """
    type_hints = dict(type_hints or {})
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            rows = list(csv.reader(handle))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not valid UTF-8: {exc}") from exc

    if not rows:
        raise DataError(f"{path} is empty (missing header row)")
    header = [name.strip() for name in rows[0]]
    if len(set(header)) != len(header):
        dupes = sorted({n for n in header if header.count(n) > 1})
        raise DataError(f"duplicate header names: {', '.join(dupes)}")
    for name, kind in type_hints.items():
        if name not in header:
            raise DataError(f"type hint for unknown column {name!r}")
        if kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"invalid type hint {kind!r} for column {name!r}")

    body = rows[1:]
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(
                f"row {i + 2} has {len(row)} fields, expected {len(header)}"
            )

    columns: dict[str, Column] = {}
    for j, name in enumerate(header):
        raw = [row[j] for row in body]
        missing = [cell in MISSING_MARKERS for cell in raw]
        present = [cell for cell, miss in zip(raw, missing) if not miss]
        hinted = type_hints.get(name)
        numeric_ok = all(_parse_numeric(cell) is not None for cell in present)
        as_numeric = numeric_ok if hinted is None else hinted == NUMERIC
        if as_numeric and not numeric_ok:
            bad = next(c for c in present if _parse_numeric(c) is None)
            raise DataError(f"column {name!r} hinted numeric but contains {bad!r}")
        if as_numeric:
            columns[name] = numeric_column(
                [None if miss else _parse_numeric(cell) for cell, miss in zip(raw, missing)]
            )
        else:
            columns[name] = categorical_column(
                [None if miss else cell for cell, miss in zip(raw, missing)]
            )
    return DataFrame(columns, len(body))
