"""Observed records, CSV ingestion and fold assignment."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# name of the permutation generator used for fold shuffling; bump if it changes
FOLD_RNG = "numpy.PCG64/v1"


class DataError(ValueError):
    """Raised for malformed input data or violated positivity requirements."""


@dataclass(frozen=True)
class Record:
    x: int
    y: int
    v: tuple[float, ...] = ()


@dataclass(frozen=True, eq=False)
class Dataset:
    """N observations of treatment ``x``, outcome ``y`` and covariates ``v``.

    Arrays are stored read-only. ``v`` always has shape ``(N, d)``; ``d`` may be 0.
    """

    x: np.ndarray
    y: np.ndarray
    v: np.ndarray
    covariate_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        x = np.asarray(self.x)
        y = np.asarray(self.y)
        v = np.asarray(self.v, dtype=float)
        if x.ndim != 1 or y.shape != x.shape:
            raise DataError("x and y must be one-dimensional arrays of equal length")
        if x.size == 0:
            raise DataError("dataset is empty")
        if v.ndim == 1 and v.size == 0:
            v = np.empty((x.size, 0))
        if v.ndim != 2 or v.shape[0] != x.size:
            raise DataError(f"covariates must have shape (N, d); got {v.shape} for N={x.size}")
        if not np.all((x == 0) | (x == 1)):
            raise DataError("treatment x must be binary {0,1}")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("outcome y must be binary {0,1}")
        if not np.all(np.isfinite(v)):
            raise DataError("covariates must be finite")
        names = tuple(self.covariate_names) or tuple(f"v{j + 1}" for j in range(v.shape[1]))
        if len(names) != v.shape[1]:
            raise DataError("covariate_names length does not match covariate_dim")
        x = x.astype(np.int8)
        y = y.astype(np.int8)
        v = np.ascontiguousarray(v)
        for arr in (x, y, v):
            arr.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "covariate_names", names)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def covariate_dim(self) -> int:
        return int(self.v.shape[1])

    def __len__(self):
        return self.n

    def records(self) -> list[Record]:
        return [
            Record(int(xi), int(yi), tuple(float(t) for t in vi))
            for xi, yi, vi in zip(self.x, self.y, self.v)
        ]

    @classmethod
    def from_records(cls, records, covariate_names=()) -> Dataset:
        records = list(records)
        if not records:
            raise DataError("dataset is empty")
        d = len(records[0].v)
        if any(len(r.v) != d for r in records):
            raise DataError("all records must share covariate_dim")
        v = np.array([r.v for r in records], dtype=float).reshape(len(records), d)
        return cls(
            np.array([r.x for r in records]),
            np.array([r.y for r in records]),
            v,
            covariate_names,
        )

    def subset(self, index) -> Dataset:
        index = np.asarray(index)
        return Dataset(self.x[index], self.y[index], self.v[index], self.covariate_names)

    def without_covariates(self) -> Dataset:
        return Dataset(self.x, self.y, np.empty((self.n, 0)))

    def check_identifiable(self):
        """Raise unless both arms are present and the treated arm has a success."""
        n1 = int(self.x.sum())
        if n1 == 0 or n1 == self.n:
            raise DataError("both treatment arms must be nonempty (positivity)")
        if not np.any((self.x == 1) & (self.y == 1)):
            raise DataError("no treated unit with y=1; probability of necessity is undefined")


def _parse_binary(token, name, line_no):
    try:
        value = float(token)
    except ValueError:
        raise DataError(f"line {line_no}: {name}={token!r} is not a number") from None
    if value not in (0.0, 1.0):
        raise DataError(f"line {line_no}: {name}={token!r} is not binary")
    return int(value)


def load_csv(path) -> Dataset:
    """Read a CSV with header ``x,y[,covariates...]`` into a :class:`Dataset`."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header[:2] != ["x", "y"]:
            raise DataError(f"{path}: header must start with columns x,y; got {header[:2]}")
        width = len(header)
        xs, ys, vs = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise DataError(f"line {line_no}: expected {width} fields, got {len(row)}")
            xs.append(_parse_binary(row[0], "x", line_no))
            ys.append(_parse_binary(row[1], "y", line_no))
            try:
                cov = [float(c) for c in row[2:]]
            except ValueError:
                raise DataError(f"line {line_no}: non-numeric covariate") from None
            if not all(math.isfinite(c) for c in cov):
                raise DataError(f"line {line_no}: non-finite covariate")
            vs.append(cov)
    if not xs:
        raise DataError(f"{path}: no data rows")
    v = np.array(vs, dtype=float).reshape(len(xs), width - 2)
    return Dataset(np.array(xs), np.array(ys), v, tuple(header[2:]))


def write_csv(data: Dataset, path):
    """Write ``data`` so that :func:`load_csv` recovers every value bit-exactly."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", *data.covariate_names])
        for xi, yi, vi in zip(data.x, data.y, data.v):
            writer.writerow([int(xi), int(yi), *(repr(float(t)) for t in vi)])


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Fold index (0-based, ``0..k-1``) for each record."""

    assignments: np.ndarray
    k: int
    seed: int
    rng: str = FOLD_RNG

    def __post_init__(self):
        self.assignments.flags.writeable = False

    def indices(self, fold):
        return np.flatnonzero(self.assignments == fold)

    def complement(self, fold):
        return np.flatnonzero(self.assignments != fold)

    def sizes(self):
        return np.bincount(self.assignments, minlength=self.k)


def _check_k(n, k):
    if k < 2:
        raise DataError(f"need at least 2 folds, got k={k}")
    if k > n:
        raise DataError(f"k={k} folds exceeds sample size n={n}")


def make_folds(n: int, k: int, seed: int) -> FoldPlan:
    """Shuffle ``0..n-1`` and deal the permutation round-robin into ``k`` folds.

    The first ``n % k`` folds receive one extra record.
    """
    _check_k(n, k)
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[perm] = np.arange(n) % k
    return FoldPlan(assignments, k, seed)


def make_stratified_folds(strata, k: int, seed: int) -> FoldPlan:
    """Like :func:`make_folds`, but each stratum is spread evenly over the folds.

    Strata are shuffled independently, concatenated in sorted-label order and
    dealt round-robin, so overall fold sizes still differ by at most one.
    """
    strata = np.asarray(strata)
    n = strata.size
    _check_k(n, k)
    rng = np.random.Generator(np.random.PCG64(seed))
    order = np.concatenate([rng.permutation(np.flatnonzero(strata == s)) for s in np.unique(strata)])
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % k
    return FoldPlan(assignments, k, seed)


def licorice_path(outcome: int = 1) -> Path:
    """Path to the bundled licorice gargle CSV for outcome 1 (0.5 h), 2 (1.5 h) or 3 (4 h).

    233 complete cases; x = 1 for sugar-water, y = 1 for any sore throat at rest;
    covariates asa, bmi, mallampati, pain are kept in their original integer/real coding.
    """
    if outcome not in (1, 2, 3):
        raise ValueError("outcome must be 1, 2 or 3")
    from importlib.resources import files

    return Path(str(files("pnbounds") / "datasets" / f"licorice_y{outcome}.csv"))
