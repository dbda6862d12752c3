"""Tabular ingestion and design-matrix encoding.

CSV in, numeric design matrix out.  Categorical columns expand to indicator
blocks with an omitted baseline category, quantitative columns are
standardized with statistics computed on the fitting sample, and an
all-ones intercept column is prepended.  Rows with missing values in any
used column are dropped, and the drop count is kept on the result.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

MISSING_TOKENS = frozenset({"", "NA"})


class DataError(Exception):
    """Unreadable, malformed, or schema-incompatible input."""


@dataclass(frozen=True, eq=False)
class RawTable:
    """A rectangular table as read from disk; cells are text or missing."""

    column_names: tuple[str, ...]
    rows: tuple[tuple, ...]

    def __post_init__(self):
        object.__setattr__(self, "column_names", tuple(self.column_names))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if len(set(self.column_names)) != len(self.column_names):
            raise DataError("duplicate column names in header")
        width = len(self.column_names)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise DataError(f"row {i} has {len(row)} cells, expected {width}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        try:
            j = self.column_names.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}") from None
        return [row[j] for row in self.rows]


@dataclass(frozen=True)
class CategoricalSpec:
    """One categorical column: its levels and the baseline level to omit."""

    name: str
    categories: tuple[str, ...]
    omitted: str

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        if len(self.categories) < 2:
            raise DataError(f"{self.name}: need at least two categories")
        if len(set(self.categories)) != len(self.categories):
            raise DataError(f"{self.name}: duplicate categories")
        if self.omitted not in self.categories:
            raise DataError(
                f"{self.name}: omitted category {self.omitted!r} not among categories"
            )

    @property
    def kept(self) -> tuple[str, ...]:
        return tuple(c for c in self.categories if c != self.omitted)


@dataclass(frozen=True)
class Schema:
    """Column roles for encoding: outcome, binary, categorical, quantitative."""

    outcome: str
    binary_cols: tuple[str, ...] = ()
    categorical_cols: tuple[CategoricalSpec, ...] = ()
    quantitative_cols: tuple[str, ...] = ()
    intercept: bool = True

    def __post_init__(self):
        object.__setattr__(self, "binary_cols", tuple(self.binary_cols))
        object.__setattr__(self, "categorical_cols", tuple(self.categorical_cols))
        object.__setattr__(self, "quantitative_cols", tuple(self.quantitative_cols))
        covs = self.covariate_columns
        if len(set(covs)) != len(covs):
            raise DataError("covariate columns listed more than once")
        if self.outcome in covs:
            raise DataError("outcome column cannot also be a covariate")

    @property
    def covariate_columns(self) -> list[str]:
        """Raw column names consumed by encode, in schema order."""
        return (
            list(self.binary_cols)
            + [c.name for c in self.categorical_cols]
            + list(self.quantitative_cols)
        )

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        try:
            cats = tuple(
                CategoricalSpec(c["name"], tuple(c["categories"]), c["omitted"])
                for c in d.get("categorical", [])
            )
            return cls(
                outcome=d["outcome"],
                binary_cols=tuple(d.get("binary", [])),
                categorical_cols=cats,
                quantitative_cols=tuple(d.get("quantitative", [])),
                intercept=bool(d.get("intercept", True)),
            )
        except KeyError as exc:
            raise DataError(f"schema is missing key {exc}") from None

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "binary": list(self.binary_cols),
            "categorical": [
                {"name": c.name, "categories": list(c.categories), "omitted": c.omitted}
                for c in self.categorical_cols
            ],
            "quantitative": list(self.quantitative_cols),
            "intercept": self.intercept,
        }


@dataclass(frozen=True, eq=False)
class Dataset:
    """Encoded design matrix and binary outcome, ready for fitting.

    ``standardization`` records the (mean, sd) applied to each quantitative
    column so the same transform can be reused elsewhere.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    standardization: dict = field(default_factory=dict)
    n_dropped: int = 0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise DataError("X must be n x k and y length n")
        if X.shape[1] != len(self.feature_names):
            raise DataError("feature_names length must match X columns")
        if not np.all(np.isfinite(X)):
            raise DataError("X contains non-finite entries")
        if not np.all((y == 0.0) | (y == 1.0)):
            raise DataError("y must be binary 0/1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]


def load_table(path) -> RawTable:
    """Read a comma-separated file with a mandatory header row.

    Cells equal to ``""`` or ``"NA"`` become missing values (``None``); rows
    with missing cells are retained.  Ragged rows and duplicate headers are
    rejected.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file, header row required") from None
            rows = []
            for i, rec in enumerate(reader):
                if len(rec) != len(header):
                    raise DataError(
                        f"{path}: row {i} has {len(rec)} cells, expected {len(header)}"
                    )
                rows.append(tuple(None if c in MISSING_TOKENS else c for c in rec))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return RawTable(tuple(header), tuple(rows))


def _as_float(value, col: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise DataError(f"column {col!r}: cannot parse {value!r} as a number") from None


def _as_binary(value, col: str) -> float:
    v = _as_float(value, col)
    if v not in (0.0, 1.0):
        raise DataError(f"column {col!r}: expected 0/1, got {value!r}")
    return v


def encode(raw: RawTable, schema: Schema) -> Dataset:
    """Build the design matrix prescribed by ``schema``.

    Rows with a missing value in the outcome or any covariate column are
    dropped; the count is recorded on the returned dataset.  Each categorical
    column with m categories becomes m-1 indicators (the omitted category maps
    to an all-zero block).  Quantitative columns are centered and scaled by
    their sample mean and n-1 standard deviation.
    """
    used = [schema.outcome] + schema.covariate_columns
    for col in used:
        if col not in raw.column_names:
            raise DataError(f"schema column {col!r} not found in table")
    col_idx = {name: raw.column_names.index(name) for name in used}

    complete = [row for row in raw.rows if all(row[col_idx[c]] is not None for c in used)]
    n_dropped = raw.n_rows - len(complete)
    if not complete:
        raise DataError("no complete rows left after dropping missing values")

    y = np.array([_as_binary(row[col_idx[schema.outcome]], schema.outcome) for row in complete])

    columns: list[np.ndarray] = []
    names: list[str] = []
    if schema.intercept:
        columns.append(np.ones(len(complete)))
        names.append("intercept")

    for col in schema.binary_cols:
        columns.append(np.array([_as_binary(row[col_idx[col]], col) for row in complete]))
        names.append(col)

    for spec in schema.categorical_cols:
        values = [row[col_idx[spec.name]] for row in complete]
        for v in values:
            if v not in spec.categories:
                raise DataError(f"column {spec.name!r}: unseen category {v!r}")
        for cat in spec.kept:
            columns.append(np.array([1.0 if v == cat else 0.0 for v in values]))
            names.append(f"{spec.name}:{cat}")

    standardization: dict = {}
    for col in schema.quantitative_cols:
        x = np.array([_as_float(row[col_idx[col]], col) for row in complete])
        mean = float(np.mean(x))
        sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        if sd == 0.0:
            raise DataError(f"column {col!r} has zero variance, cannot standardize")
        columns.append((x - mean) / sd)
        names.append(col)
        standardization[col] = (mean, sd)

    X = np.column_stack(columns)
    return Dataset(X, y, tuple(names), standardization, n_dropped)


def split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic disjoint train/test partition of an encoded dataset.

    Rows are permuted by a seeded generator and the first round(fraction * n)
    go to the test part.  Values are untouched; both parts carry the parent's
    standardization statistics, so test rows remain on the scale fitted
    upstream.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    n = ds.n
    if n < 2:
        raise DataError("need at least 2 rows to split")
    n_test = int(round(test_fraction * n))
    if n_test < 1 or n_test > n - 1:
        raise DataError(f"test fraction {test_fraction} leaves an empty part for n={n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])

    def subset(idx: np.ndarray) -> Dataset:
        return Dataset(
            ds.X[idx], ds.y[idx], ds.feature_names, dict(ds.standardization), 0
        )

    return subset(train_idx), subset(test_idx)
