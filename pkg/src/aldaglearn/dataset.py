"""Categorical datasets: CSV ingestion, encoding, discretization and counts.

Levels of a variable are encoded in order of first appearance, so the
integer codes (and therefore stage indices downstream) are reproducible
from the file alone.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateBinsError, EmptyDataError, MissingValueError, ParseError


@dataclass(frozen=True)
class VariableMeta:
    name: str
    levels: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"duplicate level names for variable {self.name!r}")

    @property
    def cardinality(self) -> int:
        return len(self.levels)


@dataclass(frozen=True, eq=False)
class CategoricalDataset:
    """N observations of p categorical variables stored as integer codes.

    ``codes[r, j]`` is the level index of variable ``j`` in row ``r``.
    Instances are treated as immutable; ``joint_counts`` results are
    memoised on the instance.
    """

    variables: tuple[VariableMeta, ...]
    codes: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[1] != len(self.variables):
            raise ValueError("codes must be an (n_rows, p) matrix matching the variables")
        for j, var in enumerate(self.variables):
            if var.cardinality < 1:
                raise ValueError(f"variable {var.name!r} has no levels")
            col = codes[:, j]
            if col.size and (col.min() < 0 or col.max() >= var.cardinality):
                raise ValueError(f"codes of variable {var.name!r} out of range")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)

    @classmethod
    def from_codes(cls, codes, cards=None, names=None) -> "CategoricalDataset":
        """Build a dataset from an integer matrix.

        Level names default to ``"0", "1", ...`` and cardinalities to
        ``max + 1`` of each column.
        """
        codes = np.asarray(codes, dtype=np.int64)
        if codes.ndim == 1:
            codes = codes.reshape(-1, 1)
        p = codes.shape[1]
        if cards is None:
            cards = [int(codes[:, j].max()) + 1 if codes.shape[0] else 1 for j in range(p)]
        if names is None:
            names = [f"X{j + 1}" for j in range(p)]
        variables = tuple(
            VariableMeta(str(names[j]), tuple(str(v) for v in range(int(cards[j]))))
            for j in range(p)
        )
        return cls(variables, codes)

    @property
    def n_rows(self) -> int:
        return self.codes.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.n_rows == 0

    @property
    def p(self) -> int:
        return len(self.variables)

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def decode(self) -> list[list[str]]:
        """Map the codes back to level names, row by row."""
        return [
            [self.variables[j].levels[c] for j, c in enumerate(row)]
            for row in self.codes.tolist()
        ]

    def select_columns(self, columns: Sequence[int]) -> "CategoricalDataset":
        columns = list(columns)
        return CategoricalDataset(
            tuple(self.variables[j] for j in columns), self.codes[:, columns]
        )


def encode_columns(names: Sequence[str], rows: Sequence[Sequence[str]]) -> CategoricalDataset:
    """Encode string rows; levels take first-appearance order per column."""
    p = len(names)
    level_maps: list[dict[str, int]] = [{} for _ in range(p)]
    codes = np.empty((len(rows), p), dtype=np.int64)
    for r, row in enumerate(rows):
        for j, value in enumerate(row):
            codes[r, j] = level_maps[j].setdefault(value, len(level_maps[j]))
    variables = tuple(VariableMeta(names[j], tuple(level_maps[j])) for j in range(p))
    return CategoricalDataset(variables, codes)


def load_csv(path, delimiter: str = ",", has_header: bool = True) -> CategoricalDataset:
    """Read a rectangular CSV file of categorical values.

    Parameters
    ----------
    path : str or path-like
        UTF-8 encoded file.
    delimiter : str
        Field separator.
    has_header : bool
        If true the first row names the variables; otherwise they are
        called ``X1 .. Xp``.

    Raises
    ------
    ParseError
        A row has a different number of fields than the first row.
    MissingValueError
        A cell is empty.
    EmptyDataError
        No data rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        table = [row for row in csv.reader(fh, delimiter=delimiter) if row]
    if has_header:
        if not table:
            raise EmptyDataError(f"{path}: no header and no data")
        names, rows = [c.strip() for c in table[0]], table[1:]
    else:
        rows = table
        names = [f"X{j + 1}" for j in range(len(rows[0]))] if rows else []
    if not rows:
        raise EmptyDataError(f"{path}: no data rows")
    width = len(names)
    cleaned = []
    for r, row in enumerate(rows):
        line = r + 1 + int(has_header)
        if len(row) != width:
            raise ParseError(f"{path}:{line}: expected {width} fields, found {len(row)}")
        row = [c.strip() for c in row]
        if any(c == "" for c in row):
            raise MissingValueError(f"{path}:{line}: empty cell")
        cleaned.append(row)
    return encode_columns(names, cleaned)


def equal_frequency_discretize(values, bins: int) -> np.ndarray:
    """Equal-frequency binning with left-closed ties.

    Boundaries are the empirical quantiles (numpy's default linear
    interpolation) at fractions ``m / bins``; a value goes to the first bin
    whose upper boundary is >= the value.

    >>> equal_frequency_discretize([1, 2, 3, 4, 5, 6], 2).tolist()
    [0, 0, 0, 1, 1, 1]
    """
    values = np.asarray(values, dtype=float)
    if bins < 2:
        raise ValueError("bins must be at least 2")
    if values.size == 0:
        raise ValueError("values must be nonempty")
    if np.unique(values).size < bins:
        raise DegenerateBinsError(
            f"{np.unique(values).size} distinct values cannot fill {bins} bins"
        )
    bounds = np.quantile(values, np.arange(1, bins) / bins)
    return np.searchsorted(bounds, values, side="left").astype(np.int64)


def joint_counts(data: CategoricalDataset, vars: Sequence[int]) -> np.ndarray:
    """Contingency table of ``vars`` with shape ``tuple(cards[v] for v in vars)``.

    An empty ``vars`` gives a 0-d array holding ``n_rows``.
    """
    key = tuple(int(v) for v in vars)
    cached = data._cache.get(key)
    if cached is not None:
        return cached
    if len(set(key)) != len(key):
        raise ValueError("variables must be distinct")
    shape = tuple(data.cards[v] for v in key)
    if not key:
        table = np.array(data.n_rows, dtype=np.int64)
    else:
        flat = np.ravel_multi_index(tuple(data.codes[:, v] for v in key), shape)
        table = np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)
    table.setflags(write=False)
    data._cache[key] = table
    return table


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def discretize_numeric_columns(data: CategoricalDataset, bins: int) -> CategoricalDataset:
    """Replace numeric columns having more than ``bins`` distinct values by
    equal-frequency bins labelled ``q1 .. q<bins>``; other columns are kept."""
    variables = list(data.variables)
    codes = data.codes.copy()
    for j, var in enumerate(data.variables):
        if len(var.levels) > bins and all(_is_number(s) for s in var.levels):
            numeric = np.array([float(s) for s in var.levels])[data.codes[:, j]]
            codes[:, j] = equal_frequency_discretize(numeric, bins)
            variables[j] = VariableMeta(var.name, tuple(f"q{b + 1}" for b in range(bins)))
    return CategoricalDataset(tuple(variables), codes)
