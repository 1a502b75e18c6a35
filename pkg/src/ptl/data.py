"""Dense dataset containers, fold assignment, and shared linear algebra."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class DataSet:
    """A response vector paired with a dense covariate matrix.

    Rows of ``X`` are observations, columns are features. Both arrays are
    validated to be finite and dimensionally consistent; instances are
    treated as immutable and safe to share.
    """

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        X = np.ascontiguousarray(self.X, dtype=float)
        y = np.ascontiguousarray(self.y, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be a two-dimensional array")
        if y.ndim != 1:
            raise ValueError("y must be a one-dimensional array")
        if X.shape[0] != y.shape[0]:
            raise ValueError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
            )
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("X needs at least one row and one column")
        if not np.isfinite(X).all() or not np.isfinite(y).all():
            raise ValueError("covariates and responses must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class FoldAssignment:
    """Cross-validation fold labels, one per observation."""

    fold_index: np.ndarray
    n_folds: int

    def held_out(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_index == fold)

    def training(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_index != fold)


def make_folds(n: int, n_folds: int, seed) -> FoldAssignment:
    """Assign ``n`` observations to folds by a seeded shuffle plus round robin.

    Fold sizes differ by at most one and the assignment is a pure function of
    ``(n, n_folds, seed)``.
    """
    if n_folds < 2 or n_folds > n:
        raise ValueError(f"need 2 <= n_folds <= n, got n_folds={n_folds}, n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    fold_index = np.empty(n, dtype=np.int64)
    fold_index[perm] = np.arange(n) % n_folds
    return FoldAssignment(fold_index=fold_index, n_folds=n_folds)


def gram_products(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(X'X / n, X'y / n)``, the normal-equation blocks."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X and y do not conform")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("non-finite values in X or y")
    n = X.shape[0]
    return X.T @ X / n, X.T @ y / n


def standardize(data: DataSet) -> DataSet:
    """Center and scale each covariate column; zero-variance columns become 0."""
    mean = data.X.mean(axis=0)
    scale = data.X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return DataSet((data.X - mean) / scale, data.y)


def load_dataset_csv(path) -> DataSet:
    """Read a dataset from CSV: header row ``y,x1,...,xp``, ``.`` decimals.

    Ragged rows and a first column not named ``y`` are rejected.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if not header or header[0] != "y":
            raise ValueError(f"{path}: first column must be named 'y'")
        width = len(header)
        if width < 2:
            raise ValueError(f"{path}: no covariate columns")
        ys: list[float] = []
        rows: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != width:
                raise ValueError(
                    f"{path}: line {lineno} has {len(row)} fields, expected {width}"
                )
            values = [float(v) for v in row]
            ys.append(values[0])
            rows.append(values[1:])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return DataSet(np.asarray(rows), np.asarray(ys))


def save_dataset_csv(data: DataSet, path) -> None:
    """Write a dataset in the CSV layout accepted by :func:`load_dataset_csv`."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["y"] + [f"x{j + 1}" for j in range(data.p)])
        for i in range(data.n):
            writer.writerow(
                [repr(float(data.y[i]))] + [repr(float(v)) for v in data.X[i]]
            )
