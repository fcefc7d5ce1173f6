"""
Dataset and column metadata.

A Dataset is an immutable (response, covariate matrix) pair with one
ColumnMeta per covariate. The intercept is never a column of X.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import DataValidationError, DimensionMismatchError


class ColumnKind(str, Enum):
    CONTINUOUS = 'continuous'
    BINARY = 'binary'
    DUMMY = 'dummy'
    NOISE = 'noise'


class Coding(str, Enum):
    STANDARDIZED = 'standardized'
    PLUS_MINUS_ONE = 'plus-minus-one'
    RAW = 'raw'


@dataclass(frozen=True)
class ColumnMeta:
    """Per-column coding metadata."""

    kind: ColumnKind
    coding: Coding
    original_name: str
    name: Optional[str] = None
    level: Optional[str] = None

    @property
    def label(self) -> str:
        return self.name or self.original_name

    def to_dict(self):
        return {
            'kind': self.kind.value,
            'coding': self.coding.value,
            'original_name': self.original_name,
            'name': self.label,
            'level': self.level,
        }


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise DimensionMismatchError(f"{name} must be {ndim}-dimensional; got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Response vector plus covariate matrix.

    Invariants: n >= 1, p >= 1, all entries finite, one ColumnMeta per column.
    Arrays are copied and made read-only on construction.
    """

    y: np.ndarray
    X: np.ndarray
    columns: Tuple[ColumnMeta, ...]
    name: str = 'dataset'
    coder: Optional[object] = field(default=None, repr=False)

    def __post_init__(self):
        y = _frozen(self.y, 1, 'y')
        X = _frozen(self.X, 2, 'X')
        object.__setattr__(self, 'y', y)
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'columns', tuple(self.columns))

        n, p = X.shape
        if n < 1 or p < 1:
            raise DataValidationError(f"Dataset '{self.name}' needs n >= 1 and p >= 1; got n={n}, p={p}")
        if y.shape[0] != n:
            raise DimensionMismatchError(f"y has {y.shape[0]} rows but X has {n}")
        if len(self.columns) != p:
            raise DimensionMismatchError(f"{len(self.columns)} column descriptors for {p} columns")
        if not np.all(np.isfinite(X)):
            raise DataValidationError(f"Dataset '{self.name}' has non-finite covariate values")
        if not np.all(np.isfinite(y)):
            raise DataValidationError(f"Dataset '{self.name}' has non-finite response values")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def column_names(self) -> Tuple[str, ...]:
        return tuple(c.label for c in self.columns)

    def take(self, rows: Sequence[int], name: Optional[str] = None) -> 'Dataset':
        """Row subset, keeping column metadata and coding parameters."""
        idx = np.asarray(rows, dtype=np.intp)
        return replace(self, y=self.y[idx], X=self.X[idx], name=name or self.name)

    def with_response(self, y, name: Optional[str] = None) -> 'Dataset':
        return replace(self, y=y, name=name or self.name)

    def append_columns(self, block: np.ndarray, metas: Sequence[ColumnMeta]) -> 'Dataset':
        block = np.asarray(block, dtype=np.float64).reshape(self.n, -1)
        return replace(
            self,
            X=np.hstack([self.X, block]),
            columns=self.columns + tuple(metas),
        )

    def is_binary_response(self) -> bool:
        return bool(np.all((self.y == 0.0) | (self.y == 1.0)))


def check_design(X, p: int) -> np.ndarray:
    """Coerce a test matrix and check its column count."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != p:
        raise DimensionMismatchError(f"Expected a matrix with {p} columns; got shape {X.shape}")
    return X


def simulated_columns(p: int, binary: Sequence[int] = (), prefix: str = 'x') -> Tuple[ColumnMeta, ...]:
    """Column metadata for generated designs (standard-normal or +/-1 columns)."""
    binary = set(binary)
    metas = []
    for j in range(p):
        if j in binary:
            metas.append(ColumnMeta(ColumnKind.BINARY, Coding.PLUS_MINUS_ONE, f'{prefix}{j + 1}'))
        else:
            metas.append(ColumnMeta(ColumnKind.CONTINUOUS, Coding.RAW, f'{prefix}{j + 1}'))
    return tuple(metas)
