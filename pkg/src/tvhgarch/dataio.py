"""Return-series ingestion, key-value config files and CSV emission."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DataError(ValueError):
    """Input data could not be read or interpreted."""


class ConfigError(ValueError):
    """A configuration file or option is malformed."""


def read_returns(path, column: str | None = None, demean: bool = False) -> np.ndarray:
    """Read percentage log-returns from a CSV file with a header row.

    Accepted layouts: a ``return`` column, or ``date,price`` in which case
    returns are ``100 * diff(log(price))``. ``column`` selects a column
    explicitly; a column named ``price`` is always treated as prices.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(text.splitlines()))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise DataError(f"{path}: line 1: missing header row")
    header = [h.strip().lower() for h in rows[0]]
    if column is not None:
        name = column.strip().lower()
        if name not in header:
            raise DataError(f"{path}: line 1: column {column!r} not in header {header}")
    elif "return" in header:
        name = "return"
    elif "price" in header:
        name = "price"
    else:
        raise DataError(f"{path}: line 1: expected a 'return' column or 'date,price' columns")
    idx = header.index(name)
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or not any(cell.strip() for cell in row):
            continue
        try:
            value = float(row[idx])
        except (IndexError, ValueError):
            raise DataError(f"{path}: line {lineno}: cannot parse {name!r} value") from None
        if not math.isfinite(value):
            raise DataError(f"{path}: line {lineno}: non-finite {name!r} value")
        values.append(value)
    if name == "price":
        prices = np.array(values)
        if len(prices) < 2:
            raise DataError(f"{path}: need at least two prices")
        if np.any(prices <= 0):
            raise DataError(f"{path}: prices must be positive")
        series = 100.0 * np.diff(np.log(prices))
    else:
        series = np.array(values)
    if len(series) == 0:
        raise DataError(f"{path}: no observations")
    if demean:
        series = series - series.mean()
    return series


def parse_config(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys are normalized
    to lower case with ``-`` replaced by ``_``."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}: line {lineno}: empty key")
        out[key.lower().replace("-", "_")] = value
    return out


def format_value(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])


def write_columns(path, columns: dict[str, Sequence]) -> None:
    """Write equally long columns, floats with 17 significant digits."""
    names = list(columns)
    write_table(path, names, zip(*(columns[n] for n in names)))


def read_columns(path) -> dict[str, np.ndarray]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    return {name: data[:, j] for j, name in enumerate(header)}
