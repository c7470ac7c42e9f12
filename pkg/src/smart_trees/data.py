"""Column-typed dataset container shared by the generators, the tree and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

# A column kind is either the string "continuous" or a tuple of category levels.
ColumnKind = Union[str, Tuple[float, ...]]

CONTINUOUS = "continuous"


@dataclass
class Dataset:
    """Feature matrix plus response.

    ``truth`` holds the noiseless response when the data came from a
    generator; ``seed`` records the generator seed (``None`` for loaded data).
    """

    X: np.ndarray
    y: np.ndarray
    column_kinds: Optional[Sequence[ColumnKind]] = None
    truth: Optional[np.ndarray] = None
    seed: Optional[int] = None
    names: Optional[Sequence[str]] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        self.y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64).ravel())
        if self.X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {self.X.shape}")
        if self.X.shape[0] != self.y.shape[0]:
            raise ValueError(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} entries"
            )
        if self.truth is not None:
            self.truth = np.asarray(self.truth, dtype=np.float64).ravel()
            if self.truth.shape[0] != self.y.shape[0]:
                raise ValueError("truth must have the same length as y")
        if self.column_kinds is None:
            self.column_kinds = [CONTINUOUS] * self.X.shape[1]
        else:
            self.column_kinds = [
                k if k == CONTINUOUS else tuple(float(v) for v in k)
                for k in self.column_kinds
            ]
            if len(self.column_kinds) != self.X.shape[1]:
                raise ValueError("column_kinds must have one entry per column")
        if self.names is None:
            self.names = [f"x{j + 1}" for j in range(self.X.shape[1])]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def width(self) -> int:
        return self.X.shape[1]

    def is_categorical(self, j: int) -> bool:
        return self.column_kinds[j] != CONTINUOUS

    @property
    def continuous_columns(self):
        return [j for j in range(self.width) if not self.is_categorical(j)]

    def subset(self, rows) -> "Dataset":
        """Rows ``rows`` of this dataset, sharing the schema."""
        rows = np.asarray(rows)
        return Dataset(
            X=self.X[rows],
            y=self.y[rows],
            column_kinds=self.column_kinds,
            truth=None if self.truth is None else self.truth[rows],
            seed=self.seed,
            names=self.names,
        )
