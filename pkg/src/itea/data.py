"""Dataset loading and resampling.

CSV files need a single header row and purely numeric cells; values are
used exactly as stored (no scaling or imputation). Cross-validation fold
plans are balanced and fully determined by their seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "FoldPlan",
    "ParseError",
    "NonFiniteValue",
    "MissingTarget",
    "InvalidK",
    "load_csv",
    "load_features_csv",
    "kfold",
]


class ParseError(ValueError):
    def __init__(self, line: int, column: int, detail: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {detail}")


class NonFiniteValue(ValueError):
    def __init__(self, line: int, column: int, value: str):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: non-finite value {value!r}")


class MissingTarget(ValueError):
    pass


class InvalidK(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Predictor matrix, target vector and the column names behind them."""

    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    target: str

    def __post_init__(self):
        if self.X.ndim != 2 or self.y.ndim != 1:
            raise ValueError("X must be 2-d and y 1-d")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X and y row counts differ")
        if self.X.shape[0] < 1 or self.X.shape[1] < 1:
            raise ValueError("dataset must have at least one row and one feature")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], self.names, self.target)


def _read_numeric_csv(path) -> tuple[list[str], np.ndarray]:
    """Header plus the full numeric matrix of a CSV file."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, 1, "empty file") from None
        header = [h.strip() for h in header]

        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(lineno, len(row) + 1,
                                 f"expected {len(header)} cells, got {len(row)}")
            parsed = []
            for colno, cell in enumerate(row, start=1):
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(lineno, colno,
                                     f"not a number: {cell.strip()!r}") from None
                if not math.isfinite(v):
                    raise NonFiniteValue(lineno, colno, cell.strip())
                parsed.append(v)
            rows.append(parsed)

    if not rows:
        raise ParseError(2, 1, "no data rows")
    return header, np.asarray(rows, dtype=float)


def load_csv(path, target: str | None = None) -> Dataset:
    """Load a numeric CSV with a header row.

    ``target`` picks the target column by name; by default the last
    column is the target. Everything else becomes a predictor, in file
    order. Non-numeric or non-finite cells are rejected outright.
    """
    header, mat = _read_numeric_csv(path)
    if target is None:
        target = header[-1]
    if target not in header:
        raise MissingTarget(f"target column {target!r} not in header {header}")
    tcol = header.index(target)
    y = mat[:, tcol]
    X = np.delete(mat, tcol, axis=1)
    names = tuple(h for i, h in enumerate(header) if i != tcol)
    return Dataset(X=X, y=y, names=names, target=target)


def load_features_csv(path) -> tuple[np.ndarray, tuple[str, ...]]:
    """Load a CSV whose columns are all predictors (no target column)."""
    header, mat = _read_numeric_csv(path)
    return mat, tuple(header)


@dataclass(frozen=True)
class FoldPlan:
    """Balanced random assignment of n rows to k folds."""

    assignments: np.ndarray
    k: int
    seed: int

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def kfold(n: int, k: int, seed: int) -> FoldPlan:
    """Random fold plan with sizes differing by at most one."""
    if not 2 <= k <= n:
        raise InvalidK(f"need 2 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignments = np.empty(n, dtype=int)
    base = n // k
    extra = n % k
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        assignments[perm[start:start + size]] = fold
        start += size
    return FoldPlan(assignments=assignments, k=k, seed=seed)
