"""Soil dataset handling: CSV loading, summary statistics, splitting, min-max
scaling with a strict train-only fit rule, and a deterministic synthetic
generator for desk-scale studies."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSplit,
    MissingColumn,
    NonFiniteValue,
    TooFewRows,
    UnparseableCell,
)

INPUT_NAMES = ("HARSH", "LL", "PL", "PI", "OMC", "CA", "MDD")
TARGET_NAMES = ("CBR", "UCS", "R")

# Observed value envelopes of the 121-sample soil study; the synthetic
# generator draws inputs inside these ranges and keeps targets inside theirs.
FEATURE_RANGES = {
    "HARSH": (0.0, 12.0),
    "LL": (27.0, 66.0),
    "PL": (12.8, 21.0),
    "PI": (14.0, 45.0),
    "OMC": (16.0, 19.0),
    "CA": (0.6, 2.0),
    "MDD": (1.25, 1.99),
}
TARGET_RANGES = {
    "CBR": (8.0, 44.6),
    "UCS": (125.0, 232.0),
    "R": (11.7, 27.0),
}

DEFAULT_NOISE_SCALE = 0.009


@dataclass(frozen=True)
class FeatureSchema:
    """Canonical column ordering for inputs and targets."""

    input_names: tuple[str, ...] = INPUT_NAMES
    target_names: tuple[str, ...] = TARGET_NAMES

    def __post_init__(self):
        if len(self.input_names) != 7 or len(self.target_names) != 3:
            raise ValueError("schema requires exactly 7 input and 3 target names")
        all_names = self.input_names + self.target_names
        if len(set(all_names)) != len(all_names):
            raise ValueError("schema names must be distinct")

    def input_index(self, name: str) -> int:
        try:
            return self.input_names.index(name)
        except ValueError:
            raise KeyError(name) from None

    def target_index(self, name: str) -> int:
        try:
            return self.target_names.index(name)
        except ValueError:
            raise KeyError(name) from None


DEFAULT_SCHEMA = FeatureSchema()


@dataclass(frozen=True)
class Dataset:
    """Immutable row-major table of input features and targets.

    `x` is n x 7, `y` is n x 3, both indexed by the schema's canonical
    column order. `row_ids` are stable identifiers preserved across splits.
    """

    schema: FeatureSchema
    x: np.ndarray
    y: np.ndarray
    row_ids: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        ids = np.asarray(self.row_ids, dtype=np.int64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "row_ids", ids)
        if x.ndim != 2 or x.shape[1] != len(self.schema.input_names):
            raise ValueError("x must be n x 7")
        if y.ndim != 2 or y.shape[1] != len(self.schema.target_names):
            raise ValueError("y must be n x 3")
        if x.shape[0] != y.shape[0] or x.shape[0] != ids.shape[0]:
            raise ValueError("x, y and row_ids must agree on n")
        if x.shape[0] < 2:
            raise TooFewRows(f"need at least 2 rows, got {x.shape[0]}")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("non-finite values are not allowed in a Dataset")
        if len(np.unique(ids)) != ids.shape[0]:
            raise ValueError("row_ids must be unique")
        x.setflags(write=False)
        y.setflags(write=False)
        ids.setflags(write=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def input_column(self, name: str) -> np.ndarray:
        return self.x[:, self.schema.input_index(name)]

    def target_column(self, name: str) -> np.ndarray:
        return self.y[:, self.schema.target_index(name)]

    def subset(self, indices: np.ndarray) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(self.schema, self.x[indices], self.y[indices], self.row_ids[indices])


@dataclass(frozen=True)
class ColumnStats:
    count: int
    mean: float
    std: float
    minimum: float
    q25: float
    median: float
    q75: float
    maximum: float


@dataclass(frozen=True)
class SummaryStats:
    """Per-column descriptive statistics over inputs and targets."""

    columns: dict[str, ColumnStats]


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-input-feature affine map fitted on training rows only.

    Transforms x' = (x - fitted_min) / (fitted_max - fitted_min); a constant
    feature maps to 0. Targets are never scaled.
    """

    fitted_min: np.ndarray
    fitted_max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.fitted_min, dtype=np.float64)
        hi = np.asarray(self.fitted_max, dtype=np.float64)
        object.__setattr__(self, "fitted_min", lo)
        object.__setattr__(self, "fitted_max", hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("fitted_min/fitted_max must be 1-D and equal length")
        if np.any(hi < lo):
            raise ValueError("fitted_max must be >= fitted_min")
        lo.setflags(write=False)
        hi.setflags(write=False)

    def transform_matrix(self, x: np.ndarray) -> np.ndarray:
        span = self.fitted_max - self.fitted_min
        safe = np.where(span > 0.0, span, 1.0)
        out = (np.asarray(x, dtype=np.float64) - self.fitted_min) / safe
        out[:, span == 0.0] = 0.0
        return out


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def load_csv(path, schema: FeatureSchema = DEFAULT_SCHEMA) -> Dataset:
    """Load a comma-separated file whose header covers all schema columns.

    Header matching is case-insensitive and order-free; cells must parse as
    finite reals. Row ids are assigned 0..n-1 in file order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TooFewRows("empty file") from None
        lookup = {name.strip().lower(): i for i, name in enumerate(header)}
        cols = {}
        for name in schema.input_names + schema.target_names:
            if name.lower() not in lookup:
                raise MissingColumn(name)
            cols[name] = lookup[name.lower()]

        x_rows, y_rows = [], []
        for r, row in enumerate(reader):
            if not row or all(not c.strip() for c in row):
                continue
            xs, ys = [], []
            for name in schema.input_names:
                xs.append(_parse_cell(row, r, name, cols[name]))
            for name in schema.target_names:
                ys.append(_parse_cell(row, r, name, cols[name]))
            x_rows.append(xs)
            y_rows.append(ys)

    if len(x_rows) < 2:
        raise TooFewRows(f"need at least 2 data rows, got {len(x_rows)}")
    n = len(x_rows)
    return Dataset(schema, np.array(x_rows), np.array(y_rows), np.arange(n))


def _parse_cell(row, r: int, name: str, idx: int) -> float:
    try:
        raw = row[idx]
    except IndexError:
        raise UnparseableCell(r, name, "<missing>") from None
    try:
        value = float(raw)
    except ValueError:
        raise UnparseableCell(r, name, raw) from None
    if not math.isfinite(value):
        raise NonFiniteValue(r, name)
    return value


def summarize(d: Dataset) -> SummaryStats:
    """Descriptive statistics per column; quantiles use linear interpolation
    between closest order statistics (index h = (n-1)p)."""
    columns = {}
    names = d.schema.input_names + d.schema.target_names
    data = np.hstack([d.x, d.y])
    for j, name in enumerate(names):
        col = data[:, j]
        q25, med, q75 = np.quantile(col, [0.25, 0.5, 0.75])
        columns[name] = ColumnStats(
            count=int(col.size),
            mean=float(col.mean()),
            std=float(col.std(ddof=1)),
            minimum=float(col.min()),
            q25=float(q25),
            median=float(med),
            q75=float(q75),
            maximum=float(col.max()),
        )
    return SummaryStats(columns)


def split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Deterministic random split: seeded uniform permutation, then prefix/
    suffix assignment. Train size = round(train_fraction * n), half-up."""
    n = d.n
    n_train = _round_half_up(spec.train_fraction * n)
    n_test = n - n_train
    if n_train < 2 or n_test < 2:
        raise DegenerateSplit(
            f"split of n={n} at fraction {spec.train_fraction} leaves a partition "
            f"with fewer than 2 rows ({n_train}/{n_test})"
        )
    perm = np.random.default_rng(spec.seed).permutation(n)
    return d.subset(np.sort(perm[:n_train])), d.subset(np.sort(perm[n_train:]))


def fit_scaler(train: Dataset) -> MinMaxScaler:
    """Fit per-feature extrema on the training partition only."""
    lo = train.x.min(axis=0)
    hi = train.x.max(axis=0)
    constant = np.flatnonzero(hi == lo)
    for j in constant:
        warnings.warn(
            f"feature {train.schema.input_names[j]!r} is constant on the training "
            "partition; it will be scaled to 0",
            stacklevel=2,
        )
    return MinMaxScaler(lo, hi)


def transform(s: MinMaxScaler, d: Dataset) -> Dataset:
    """Apply the fitted min-max map to the input features; targets pass
    through unchanged. Out-of-range values are deliberately not clipped."""
    return Dataset(d.schema, s.transform_matrix(d.x), d.y, d.row_ids)


def clean_targets(x: np.ndarray) -> np.ndarray:
    """Noise-free target surface of the synthetic generator.

    A convex score of four normalized features -- rising in HARSH and MDD,
    falling in LL and PI -- passed through a mildly curved monotone warp and
    mapped into each target's observed envelope with a 3% interior margin.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    uh = x[:, 0] / 12.0
    ul = (66.0 - x[:, 1]) / 39.0
    up = (45.0 - x[:, 3]) / 31.0
    um = (x[:, 6] - 1.25) / 0.74
    s = 0.45 * uh + 0.2 * ul + 0.15 * up + 0.2 * um
    t = s + 0.1 * s * (1.0 - s)
    margin = 0.03
    out = np.empty((x.shape[0], 3))
    for j, name in enumerate(TARGET_NAMES):
        lo, hi = TARGET_RANGES[name]
        out[:, j] = lo + (hi - lo) * (margin + (1.0 - 2.0 * margin) * t)
    return out


def synthesize(
    seed: int,
    n: int,
    noise_scale: float = DEFAULT_NOISE_SCALE,
    schema: FeatureSchema = DEFAULT_SCHEMA,
) -> Dataset:
    """Deterministic synthetic stand-in for the private 121-sample study data.

    Inputs are drawn inside the observed per-feature ranges with HARSH
    negatively associated with LL/PL/PI and positively with MDD. Targets are
    ``clean_targets`` plus Gaussian noise of ``noise_scale`` times each
    target's range, clipped to the observed envelope.
    """
    if n < 10:
        raise ValueError("synthetic datasets need n >= 10")
    if noise_scale < 0:
        raise ValueError("noise_scale must be >= 0")
    rng = np.random.default_rng(seed)
    harsh = rng.uniform(0.0, 12.0, n)
    u = harsh / 12.0

    def inverse(lo, hi):
        jitter = rng.uniform(-0.15, 0.15, n)
        return lo + (hi - lo) * np.clip(1.0 - u + jitter, 0.0, 1.0)

    ll = inverse(*FEATURE_RANGES["LL"])
    pl = inverse(*FEATURE_RANGES["PL"])
    pi = inverse(*FEATURE_RANGES["PI"])
    omc = rng.uniform(*FEATURE_RANGES["OMC"], n)
    ca = rng.uniform(*FEATURE_RANGES["CA"], n)
    mdd_lo, mdd_hi = FEATURE_RANGES["MDD"]
    mdd = mdd_lo + (mdd_hi - mdd_lo) * np.clip(u + rng.uniform(-0.15, 0.15, n), 0.0, 1.0)

    x = np.column_stack([harsh, ll, pl, pi, omc, ca, mdd])
    y = clean_targets(x)
    if noise_scale > 0:
        for j, name in enumerate(TARGET_NAMES):
            lo, hi = TARGET_RANGES[name]
            y[:, j] += rng.normal(0.0, noise_scale * (hi - lo), n)
            np.clip(y[:, j], lo, hi, out=y[:, j])
    return Dataset(schema, x, y, np.arange(n))
