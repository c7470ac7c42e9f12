"""Row-wise QR updating with Givens rotations, back substitution and batch OLS.

The incremental factor keeps a dense ``M x M`` upper-triangular workspace ``R``
and ``W = Q^T y``.  Row ``j`` of ``R`` is the pivot row of column ``j``; a row
that is still all zero means column ``j`` has not (yet) contributed an
independent direction.  Adding an observation rotates it through the occupied
rows; when it reaches an empty row with a non-negligible entry the rotation
drops it into that row, which is exactly the "append a row while there are
fewer rows than columns" step of the textbook update.

Column negligibility is judged relative to that column's own norm over the
rows seen so far (``tol_j = RANK_TOL * ||A[:, j]||``), so wildly different
column scales do not mask each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.linalg import solve_triangular

RANK_TOL = 1e-10


@njit(cache=True, nogil=True)
def givens(a, b):
    """Rotation ``(c, s)`` with ``s*a + c*b == 0`` and ``c**2 + s**2 == 1``.

    Applied as ``a' = c*a - s*b``, ``b' = s*a + c*b``.
    """
    if b == 0.0:
        return 1.0, 0.0
    if abs(b) >= abs(a):
        t = -a / b
        s = 1.0 / math.sqrt(1.0 + t * t)
        c = s * t
    else:
        t = -b / a
        c = 1.0 / math.sqrt(1.0 + t * t)
        s = c * t
    return c, s


@njit(cache=True, nogil=True)
def _rotate_in(R, W, colss, resid, x, y, tol):
    """Rotate row ``(x, y)`` through ``(R, W)`` without touching the column norms."""
    M = R.shape[1]
    for j in range(M):
        xj = x[j]
        if xj == 0.0:
            continue
        rjj = R[j, j]
        if rjj == 0.0:
            if abs(xj) <= tol * math.sqrt(colss[j]):
                x[j] = 0.0
                continue
            # empty pivot row: the remainder of the observation becomes it
            for k in range(j, M):
                R[j, k] = x[k]
                x[k] = 0.0
            W[j] = y
            return
        c, s = givens(rjj, xj)
        R[j, j] = c * rjj - s * xj
        x[j] = 0.0
        for k in range(j + 1, M):
            t1 = R[j, k]
            t2 = x[k]
            R[j, k] = c * t1 - s * t2
            x[k] = s * t1 + c * t2
        t1 = W[j]
        W[j] = c * t1 - s * y
        y = s * t1 + c * y
    resid[0] += y * y


@njit(cache=True, nogil=True)
def _add_row(R, W, colss, resid, x, y, tol):
    """Fold observation ``(x, y)`` into ``(R, W)``.  ``x`` is overwritten."""
    for j in range(R.shape[1]):
        colss[j] += x[j] * x[j]
    _rotate_in(R, W, colss, resid, x, y, tol)


@njit(cache=True, nogil=True)
def _drop_column(R, W, colss, resid, j, tol):
    """Remove column ``j`` from the factor in place.

    Its pivot row, minus the column, is rotated back into the rows below, so
    the factor becomes that of the remaining columns.
    """
    x = R[j, :].copy()
    y = W[j]
    x[j] = 0.0
    R[j, :] = 0.0
    W[j] = 0.0
    for i in range(j):
        R[i, j] = 0.0
    colss[j] = 0.0
    _rotate_in(R, W, colss, resid, x, y, tol)


@njit(cache=True, nogil=True)
def _back_substitute_lead(R, W, colss, tol, beta, m):
    """Least squares on the first ``m`` columns only; later coefficients are zero.

    Valid because the leading block of a triangular factor is the factor of
    the leading columns.  Returns True if any pivot was dropped.
    """
    M = R.shape[1]
    for j in range(m, M):
        beta[j] = 0.0
    deficient = False
    for j in range(m - 1, -1, -1):
        d = R[j, j]
        if d == 0.0 or abs(d) <= tol * math.sqrt(colss[j]):
            beta[j] = 0.0
            deficient = True
            continue
        acc = W[j]
        for k in range(j + 1, m):
            acc -= R[j, k] * beta[k]
        beta[j] = acc / d
    return deficient


@njit(cache=True, nogil=True)
def _back_substitute(R, W, colss, tol, beta):
    """Solve ``R beta = W`` from the bottom row up; returns True if any pivot was dropped."""
    return _back_substitute_lead(R, W, colss, tol, beta, R.shape[1])


@njit(cache=True, nogil=True)
def _factor_rss(R, W, resid, beta):
    """``||A beta - y||^2`` for the rows folded into ``(R, W, resid)``."""
    M = R.shape[1]
    total = resid[0]
    for j in range(M):
        acc = -W[j]
        for k in range(j, M):
            acc += R[j, k] * beta[k]
        total += acc * acc
    return total


@njit(cache=True, nogil=True)
def _add_rows(R, W, colss, resid, X, y, tol):
    scratch = np.empty(X.shape[1])
    for i in range(X.shape[0]):
        for k in range(X.shape[1]):
            scratch[k] = X[i, k]
        _add_row(R, W, colss, resid, scratch, y[i], tol)


class TriangularFactor:
    """Incrementally maintained ``(R, W)`` for least squares on a growing row set.

    ``R`` is the ``M x M`` workspace, ``W`` holds ``Q^T y``.  ``rss_fit`` is the
    residual sum of squares of the least-squares fit to all rows seen so far,
    accumulated from the rotated-out part of the response.
    """

    def __init__(self, n_cols: int, tol: float = RANK_TOL):
        if n_cols < 1:
            raise ValueError("a factor needs at least one column")
        self.R = np.zeros((n_cols, n_cols))
        self.W = np.zeros(n_cols)
        self.rows_seen = 0
        self.tol = tol
        self._colss = np.zeros(n_cols)
        self._resid = np.zeros(1)

    @property
    def n_cols(self) -> int:
        return self.R.shape[1]

    @property
    def m_star(self) -> int:
        return min(self.rows_seen, self.n_cols)

    @property
    def rss_fit(self) -> float:
        return float(self._resid[0])

    def update(self, new_row, new_y: float) -> "TriangularFactor":
        x = np.array(new_row, dtype=np.float64).ravel()
        if x.shape[0] != self.n_cols:
            raise ValueError(f"row has {x.shape[0]} entries, factor has {self.n_cols} columns")
        if not (np.all(np.isfinite(x)) and math.isfinite(new_y)):
            raise FloatingPointError("non-finite value in update")
        _add_row(self.R, self.W, self._colss, self._resid, x, float(new_y), self.tol)
        self.rows_seen += 1
        return self

    def update_many(self, X, y) -> "TriangularFactor":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_cols or X.shape[0] != y.shape[0]:
            raise ValueError("shape mismatch in update_many")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise FloatingPointError("non-finite value in update")
        _add_rows(self.R, self.W, self._colss, self._resid, X, y, self.tol)
        self.rows_seen += X.shape[0]
        return self

    def solve(self):
        """Back substitution; returns ``(coefficients, rank_deficient)``."""
        beta = np.zeros(self.n_cols)
        deficient = _back_substitute(self.R, self.W, self._colss, self.tol, beta)
        return beta, bool(deficient)

    def copy(self) -> "TriangularFactor":
        other = TriangularFactor.__new__(TriangularFactor)
        other.R = self.R.copy()
        other.W = self.W.copy()
        other.rows_seen = self.rows_seen
        other.tol = self.tol
        other._colss = self._colss.copy()
        other._resid = self._resid.copy()
        return other


@dataclass
class FitStats:
    coefficients: np.ndarray
    rss_fit: float
    rank_deficient: bool


def update(factor: TriangularFactor, new_row, new_y: float) -> TriangularFactor:
    """Fold one observation into ``factor`` (in place) and return it."""
    return factor.update(new_row, new_y)


def back_substitute(R, W) -> np.ndarray:
    """Plain upper-triangular solve with the same zero-pivot policy as the factor."""
    R = np.asarray(R, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64).ravel()
    M = R.shape[1]
    if R.shape[0] < M:
        R = np.vstack([R, np.zeros((M - R.shape[0], M))])
        W = np.concatenate([W, np.zeros(M - W.shape[0])])
    scale = np.sqrt((R * R).sum(axis=0))
    beta = np.zeros(M)
    _back_substitute(np.ascontiguousarray(R), np.ascontiguousarray(W), scale * scale, RANK_TOL, beta)
    return beta


def solve_and_rss(factor: TriangularFactor, validation_X, validation_Y) -> FitStats:
    """Coefficients from ``factor`` scored on a (possibly different) row set."""
    if factor.rows_seen < 1:
        raise ValueError("factor has seen no rows")
    beta, deficient = factor.solve()
    Xv = np.asarray(validation_X, dtype=np.float64).reshape(-1, factor.n_cols)
    resid = np.asarray(validation_Y, dtype=np.float64).ravel() - Xv @ beta
    return FitStats(beta, float(resid @ resid), deficient)


def independent_columns(X: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Indices of columns that add a direction not spanned by earlier columns.

    Classical Gram-Schmidt with one re-orthogonalisation pass; a column is
    dropped when what remains of it is below ``tol`` times its norm.
    """
    n, M = X.shape
    Q = np.empty((n, min(n, M)))
    keep = []
    for j in range(M):
        v = X[:, j].astype(np.float64)
        norm = math.sqrt(v @ v)
        if norm == 0.0 or len(keep) >= n:
            continue
        k = len(keep)
        if k:
            Qk = Q[:, :k]
            v = v - Qk @ (Qk.T @ v)
            v = v - Qk @ (Qk.T @ v)
        rem = math.sqrt(v @ v)
        if rem > tol * norm:
            Q[:, k] = v / rem
            keep.append(j)
    return np.array(keep, dtype=np.intp)


def batch_ols(X, Y) -> FitStats:
    """Least squares from a fresh Householder factorization of the full matrix.

    Columns that are (numerically) combinations of earlier ones get a zero
    coefficient and set ``rank_deficient``.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("batch_ols needs a non-empty 2-D design matrix")
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    keep = independent_columns(X)
    beta = np.zeros(X.shape[1])
    if keep.size:
        Q, R = np.linalg.qr(X[:, keep])
        beta[keep] = solve_triangular(R, Q.T @ Y)
    resid = Y - X @ beta
    return FitStats(beta, float(resid @ resid), keep.size < X.shape[1])
