"""Strict CSV reading and writing for the command line tools.

Files are UTF-8 with a header row and '.' as decimal separator.  Every cell
must parse as a finite number; there is no missing-value support.
"""

from __future__ import annotations

import csv
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .data import CONTINUOUS, Dataset


class CSVError(ValueError):
    """Malformed input, reported with the offending row and column."""


def read_table(path) -> Tuple[List[str], np.ndarray]:
    """Header and an ``(n, k)`` float matrix.

    Row numbers in error messages count the header as row 1, matching what a
    text editor shows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CSVError(f"{path}: empty file (a header row is required)") from None
        header = [h.strip() for h in header]
        if not header or any(h == "" for h in header):
            raise CSVError(f"{path}: header has an empty column name")
        dup = sorted({h for h in header if header.count(h) > 1})
        if dup:
            raise CSVError(f"{path}: duplicate column names {dup}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise CSVError(f"{path}: row {lineno} has {len(rec)} cells, header has {len(header)}")
            vals = []
            for name, cell in zip(header, rec):
                try:
                    v = float(cell)
                except ValueError:
                    raise CSVError(f"{path}: row {lineno}, column {name!r}: "
                                   f"{'missing value' if not cell.strip() else f'non-numeric value {cell!r}'}") from None
                if not math.isfinite(v):
                    raise CSVError(f"{path}: row {lineno}, column {name!r}: non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    return header, np.array(rows, dtype=np.float64).reshape(len(rows), len(header))


def read_dataset(path, target: str, categorical: Sequence[str] = (), ignore: Sequence[str] = ()) -> Dataset:
    """Load a training file; every column except ``target`` and ``ignore`` is a feature.

    Categorical columns hold numeric level codes; their level set is taken
    from the file.
    """
    header, M = read_table(path)
    if target not in header:
        raise CSVError(f"{path}: target column {target!r} not found; columns are {header}")
    for label, cols in (("categorical", categorical), ("ignored", ignore)):
        missing = [c for c in cols if c not in header]
        if missing:
            raise CSVError(f"{path}: {label} columns not found: {missing}")
    if target in categorical:
        raise CSVError(f"{path}: the target column cannot be categorical")
    names = [h for h in header if h != target and h not in ignore]
    if not names:
        raise CSVError(f"{path}: no feature columns left")
    X = M[:, [header.index(h) for h in names]]
    y = M[:, header.index(target)]
    kinds = [tuple(np.unique(X[:, j])) if h in categorical else CONTINUOUS for j, h in enumerate(names)]
    return Dataset(X, y, column_kinds=kinds, names=names)


def select_columns(path, header: List[str], M: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Columns ``names`` of a table read by ``read_table``, in that order."""
    missing = [c for c in names if c not in header]
    if missing:
        raise CSVError(f"{path}: missing columns required by the model: {missing}")
    return M[:, [header.index(c) for c in names]]


def format_number(v: float) -> str:
    return repr(float(v))


def write_table(fh, header: Sequence[str], M: np.ndarray, extra: Optional[Tuple[str, np.ndarray]] = None) -> None:
    """Write ``M`` under ``header``, optionally appending one more column."""
    w = csv.writer(fh, lineterminator="\n")
    head = list(header) + ([extra[0]] if extra else [])
    w.writerow(head)
    for i in range(M.shape[0]):
        row = [format_number(v) for v in M[i]]
        if extra:
            row.append(format_number(extra[1][i]))
        w.writerow(row)
