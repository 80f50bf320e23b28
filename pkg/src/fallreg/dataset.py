"""Dataset loading, standardization, splitting, and synthetic generators.

All numeric I/O of the toolkit lives here. Datasets are immutable after
construction (arrays are marked read-only) so they can be shared freely
across threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """A data file or array cannot be turned into a valid Dataset."""


@dataclass(frozen=True)
class Dataset:
    """An n x d feature matrix X paired with an n x m target matrix Y.

    `groups` is optional generator metadata (plateau / class membership of
    each row, used by cluster-recovery tests and the synth CLI); it is never
    part of the features.
    """

    X: np.ndarray
    Y: np.ndarray
    feature_names: tuple[str, ...] = ()
    target_names: tuple[str, ...] = ()
    groups: np.ndarray | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        Y = np.ascontiguousarray(self.Y, dtype=np.float64)
        if X.ndim != 2 or Y.ndim != 2:
            raise DataError("X and Y must be 2-D arrays")
        if X.shape[0] != Y.shape[0]:
            raise DataError(
                f"X has {X.shape[0]} rows but Y has {Y.shape[0]}"
            )
        if X.shape[0] < 1:
            raise DataError("dataset needs at least one row")
        if not np.isfinite(X).all() or not np.isfinite(Y).all():
            raise DataError("dataset contains NaN or Inf entries")
        fnames = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        tnames = tuple(self.target_names) or tuple(f"y{j}" for j in range(Y.shape[1]))
        if len(fnames) != X.shape[1]:
            raise DataError("feature_names length does not match X columns")
        if len(tnames) != Y.shape[1]:
            raise DataError("target_names length does not match Y columns")
        groups = self.groups
        if groups is not None:
            groups = np.ascontiguousarray(groups, dtype=np.int64)
            if groups.shape != (X.shape[0],):
                raise DataError("groups must have one label per row")
            groups.flags.writeable = False
        X.flags.writeable = False
        Y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "feature_names", fnames)
        object.__setattr__(self, "target_names", tnames)
        object.__setattr__(self, "groups", groups)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def m(self) -> int:
        return self.Y.shape[1]

    def subset(self, idx: np.ndarray) -> "Dataset":
        """Row subset (copy), preserving names and group metadata."""
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            self.X[idx].copy(),
            self.Y[idx].copy(),
            self.feature_names,
            self.target_names,
            None if self.groups is None else self.groups[idx].copy(),
        )


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-scoring; constant columns get std 1 so they map to 0."""

    mean: np.ndarray
    std: np.ndarray
    applied_to_targets: bool = False
    target_mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    target_std: np.ndarray = field(default_factory=lambda: np.ones(0))

    def transform_x(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.std

    def inverse_transform_x(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) * self.std + self.mean

    def transform_y(self, Y: np.ndarray) -> np.ndarray:
        if not self.applied_to_targets:
            return np.asarray(Y, dtype=np.float64).copy()
        return (np.asarray(Y, dtype=np.float64) - self.target_mean) / self.target_std

    def inverse_transform_y(self, Y: np.ndarray) -> np.ndarray:
        if not self.applied_to_targets:
            return np.asarray(Y, dtype=np.float64).copy()
        return np.asarray(Y, dtype=np.float64) * self.target_std + self.target_mean

    def transform(self, data: Dataset) -> Dataset:
        return Dataset(
            self.transform_x(data.X),
            self.transform_y(data.Y),
            data.feature_names,
            data.target_names,
            data.groups,
        )

    def inverse_transform(self, data: Dataset) -> Dataset:
        return Dataset(
            self.inverse_transform_x(data.X),
            self.inverse_transform_y(data.Y),
            data.feature_names,
            data.target_names,
            data.groups,
        )


def _column_stats(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Constant columns detected exactly (max == min) so their std is exactly 1
    # and their mean is the constant itself, immune to summation roundoff.
    mean = M.mean(axis=0)
    std = M.std(axis=0)  # population std
    constant = M.max(axis=0) == M.min(axis=0)
    mean = np.where(constant, M[0], mean)
    std = np.where(constant, 1.0, std)
    return mean, std


def fit_standardizer(data: Dataset, standardize_targets: bool = False) -> Standardizer:
    """Fit per-column mean/std over rows of X (and of Y when requested)."""
    mean, std = _column_stats(data.X)
    if standardize_targets:
        tmean, tstd = _column_stats(data.Y)
    else:
        tmean, tstd = np.zeros(data.m), np.ones(data.m)
    return Standardizer(mean, std, standardize_targets, tmean, tstd)


def load_csv(
    path,
    target_columns: list[str],
    has_header: bool = True,
    ignore_columns: tuple[str, ...] = (),
) -> Dataset:
    """Load a numeric CSV into a Dataset.

    The columns named in `target_columns` become Y (in the order given);
    every other non-ignored column becomes a feature, in file order. Without
    a header, columns are named c0, c1, ... Cells are parsed as 64-bit
    floats; the first unparseable cell is reported with its row and column.
    """
    if not target_columns:
        raise DataError("target_columns must be nonempty")
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"no such data file: {path}") from None
    with fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]  # tolerate trailing blank lines
    if not rows:
        raise DataError(f"empty file: {path}")

    if has_header:
        names = [c.strip() for c in rows[0]]
        data_rows = rows[1:]
        first_line = 2
    else:
        names = [f"c{j}" for j in range(len(rows[0]))]
        data_rows = rows
        first_line = 1
    if not data_rows:
        raise DataError(f"no data rows in {path}")

    for col in list(target_columns) + list(ignore_columns):
        if col not in names:
            raise DataError(f"unknown column {col!r}; file has {names}")

    n_cols = len(names)
    values = np.empty((len(data_rows), n_cols))
    for i, row in enumerate(data_rows):
        if len(row) != n_cols:
            raise DataError(
                f"row {first_line + i} has {len(row)} cells, expected {n_cols}"
            )
        for j, cell in enumerate(row):
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"non-numeric value {cell.strip()!r} at row "
                    f"{first_line + i}, column {names[j]!r}"
                ) from None

    target_idx = [names.index(c) for c in target_columns]
    skip = set(target_idx) | {names.index(c) for c in ignore_columns}
    feature_idx = [j for j in range(n_cols) if j not in skip]
    if not feature_idx:
        raise DataError("no feature columns left after removing targets")
    return Dataset(
        values[:, feature_idx],
        values[:, target_idx],
        tuple(names[j] for j in feature_idx),
        tuple(target_columns),
    )


def save_csv(data: Dataset, path, group_name: str | None = None) -> None:
    """Write a Dataset as CSV (features, then targets, then optional groups).

    Floats are written with shortest round-trip formatting, so a load/save
    cycle preserves values exactly.
    """
    header = list(data.feature_names) + list(data.target_names)
    if group_name is not None:
        if data.groups is None:
            raise DataError("dataset has no group metadata to write")
        header.append(group_name)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.X[i]]
            row += [repr(float(v)) for v in data.Y[i]]
            if group_name is not None:
                row.append(str(int(data.groups[i])))
            writer.writerow(row)


def train_test_split(
    data: Dataset, test_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Seeded disjoint split; the test side gets floor(n * test_fraction) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n_test = int(np.floor(data.n * test_fraction))
    if n_test < 1 or data.n - n_test < 1:
        raise ValueError(
            f"test_fraction {test_fraction} yields an empty side for n={data.n}"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(data.n)
    return data.subset(perm[n_test:]), data.subset(perm[:n_test])


def synth_step(n: int, noise_sigma: float, seed: int) -> Dataset:
    """1-D step data: targets are 0 left of the interval midpoint, 1 right,
    plus Gaussian noise. Plateau membership is stored in `groups`."""
    if n < 2:
        raise ValueError("need n >= 2")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=n)
    plateau = (x >= 0.5).astype(np.int64)
    y = plateau + noise_sigma * rng.standard_normal(n)
    return Dataset(
        x.reshape(-1, 1), y.reshape(-1, 1), ("x",), ("y",), plateau
    )


def synth_two_moons(n: int, noise_sigma: float, seed: int) -> Dataset:
    """Two interleaving half-circles in 2-D with one-hot class targets.

    Class 0 is the upper arc of the unit circle at the origin; class 1 is
    the lower arc shifted to center (1, 0.5). Classes get n//2 and n - n//2
    points. Class membership is stored in `groups`.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    n0 = n // 2
    n1 = n - n0
    t0 = np.linspace(0.0, np.pi, n0)
    t1 = np.linspace(0.0, np.pi, n1)
    pts = np.concatenate(
        [
            np.column_stack([np.cos(t0), np.sin(t0)]),
            np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)]),
        ]
    )
    pts = pts + noise_sigma * rng.standard_normal(pts.shape)
    labels = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    onehot = np.zeros((n, 2))
    onehot[np.arange(n), labels] = 1.0
    return Dataset(pts, onehot, ("x1", "x2"), ("class0", "class1"), labels)
