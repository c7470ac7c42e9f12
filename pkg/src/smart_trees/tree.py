"""Recursive partitioning of a fixed spline basis.

Each node looks for the single ``x_d <= s`` split that minimises held-out RSS
once the basis coefficients are re-estimated on both sides, and only commits
it when k-fold cross-validated RSS improves by at least a relative threshold.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from numba import njit

from .basis import NodeModel, design_matrix, predict as predict_model
from .data import Dataset
from .forward import auto_endspan, refit_xy
from .qr import RANK_TOL, _add_row, _back_substitute_lead, _drop_column, _factor_rss, batch_ols


@dataclass
class TreeConfig:
    cv_improvement_threshold: float = 0.01
    cv_folds: int = 5
    fit_fraction: float = 0.7
    small_node_factor: int = 10
    rng_seed: int = 0
    endspan: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.fit_fraction < 1.0:
            raise ValueError("fit_fraction must lie in (0, 1)")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.endspan is not None and self.endspan < 1:
            raise ValueError("endspan must be >= 1 (or None for automatic)")

    def span_for(self, data: Dataset) -> int:
        """Minimum rows a term must be non-zero on to be fitted within a node or side."""
        if self.endspan is not None:
            return self.endspan
        return auto_endspan(len(data.continuous_columns))


@dataclass(frozen=True)
class SplitCandidate:
    variable: int
    value: float
    validation_rss: float
    categorical: bool = False
    n_left: int = 0
    n_right: int = 0

    def goes_left(self, x: np.ndarray) -> np.ndarray:
        """Boolean routing mask for column values ``x``."""
        return x == self.value if self.categorical else x <= self.value


@dataclass
class Leaf:
    model: NodeModel
    rows: Optional[np.ndarray] = field(default=None, repr=False)

    is_leaf = True


@dataclass
class Split:
    split: SplitCandidate
    left: "TreeNode"
    right: "TreeNode"
    cv_unsplit: float = math.nan
    cv_split: float = math.nan

    is_leaf = False

    @property
    def variable(self) -> int:
        return self.split.variable

    @property
    def value(self) -> float:
        return self.split.value


TreeNode = Union[Leaf, Split]


def n_threads() -> int:
    """Worker cap from ``SMART_THREADS`` (0 or unset means one per CPU)."""
    try:
        k = int(os.environ.get("SMART_THREADS", "0"))
    except ValueError:
        k = 0
    return k if k > 0 else (os.cpu_count() or 1)


def _ordered_map(fn, items):
    items = list(items)
    k = min(n_threads(), len(items))
    if k <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# Continuous split scan
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _active(seen, act):
    """Number of columns (in activation order) usable after ``seen`` rows."""
    a = 0
    while a < act.shape[0] and act[a] <= seen:
        a += 1
    return a


@njit(cache=True, nogil=True)
def _side_solve(R, W, cs, tol, beta, seen, act, zs, zk, grp, orig, full, keeper, R2, W2, cs2, r2):
    """Side coefficients after ``seen`` sweep rows.

    Columns before their activation count are left out by solving only the
    leading block.  Active columns whose zero count is between 1 and
    ``span - 1`` (tracked as ``zs <= seen < zk``) are removed from a copy of
    the factor first when ``supported_columns`` would drop them; ``orig``
    holds the original column indices that decide which one of a group stays.
    """
    a = _active(seen, act)
    full[:] = False
    keeper[:] = orig.shape[0]
    for j in range(1, a):
        if zs[j] <= seen < zk[j]:
            keeper[grp[j]] = min(keeper[grp[j]], orig[j])
        else:
            full[grp[j]] = True
    copied = False
    for j in range(1, a):
        if zs[j] <= seen < zk[j]:
            g = grp[j]
            if not full[g] and keeper[g] == orig[j]:
                continue
            if not copied:
                R2[:, :] = R
                W2[:] = W
                cs2[:] = cs
                copied = True
            _drop_column(R2, W2, cs2, r2, j, tol)
    if copied:
        _back_substitute_lead(R2, W2, cs2, tol, beta, a)
    else:
        _back_substitute_lead(R, W, cs, tol, beta, a)


@njit(cache=True, nogil=True)
def _dual_scan(BfL, BvL, actL, zsL, zkL, grpL, permL, BfR, BvR, actR, zsR, zkR, grpR, permR, yf, xf, of, yv, xv, ov,
               min_rows, tol, out_s, out_left, out_right, out_nl, out_nr, betaL, betaR):
    """Evaluate every distinct fitting value of one column as a split point.

    The left fit grows in an ascending sweep and the right fit in a separate
    descending sweep, so the factors only ever gain rows.  Validation rows are
    folded into their own factors alongside, which turns the held-out RSS of
    any coefficient vector into an O(M^2) evaluation.

    Each sweep has its own column order: columns are sorted by ``act``, the
    number of sweep rows after which they have enough non-zero entries to be
    fitted, so those columns form a leading block.  See ``_side_solve`` for
    the columns that are excluded for having too few zero entries.  A side
    with fewer than ``min_rows`` fitting rows scores ``inf``.  The side
    coefficients of every candidate are left in ``betaL``/``betaR`` (in the
    respective sweep's column order).
    """
    nf = BfL.shape[0]
    nv = BvL.shape[0]
    M = BfL.shape[1]
    x = np.empty(M)
    beta = np.empty(M)
    R2 = np.empty((M, M)); W2 = np.empty(M); cs2 = np.empty(M); r2 = np.zeros(1)
    G = max(grpL.max(), grpR.max()) + 1
    full = np.zeros(G, dtype=np.bool_); keeper = np.zeros(G, dtype=np.int64)
    U = 0
    for ii in range(nf):
        if ii == 0 or xf[of[ii]] != xf[of[ii - 1]]:
            out_s[U] = xf[of[ii]]
            U += 1
    # ascending sweep: left side holds values <= s
    R = np.zeros((M, M)); W = np.zeros(M); cs = np.zeros(M); rs = np.zeros(1)
    RV = np.zeros((M, M)); WV = np.zeros(M); csv = np.zeros(M); rsv = np.zeros(1)
    ii = 0
    jv = 0
    for g in range(U):
        s = out_s[g]
        while ii < nf and xf[of[ii]] == s:
            i = of[ii]
            for k in range(M):
                x[k] = BfL[i, k]
            _add_row(R, W, cs, rs, x, yf[i], tol)
            ii += 1
        while jv < nv and xv[ov[jv]] <= s:
            i = ov[jv]
            for k in range(M):
                x[k] = BvL[i, k]
            _add_row(RV, WV, csv, rsv, x, yv[i], tol)
            jv += 1
        out_nl[g] = ii
        if ii >= min_rows and g < U - 1:
            _side_solve(R, W, cs, tol, beta, ii, actL, zsL, zkL, grpL, permL, full, keeper, R2, W2, cs2, r2)
            out_left[g] = _factor_rss(RV, WV, rsv, beta)
            betaL[g, :] = beta
        else:
            out_left[g] = np.inf
    # descending sweep: right side holds values > s
    R[:, :] = 0.0; W[:] = 0.0; cs[:] = 0.0; rs[0] = 0.0
    RV[:, :] = 0.0; WV[:] = 0.0; csv[:] = 0.0; rsv[0] = 0.0
    ii = nf - 1
    jv = nv - 1
    cnt = 0
    for g in range(U - 1, -1, -1):
        s = out_s[g]
        while jv >= 0 and xv[ov[jv]] > s:
            i = ov[jv]
            for k in range(M):
                x[k] = BvR[i, k]
            _add_row(RV, WV, csv, rsv, x, yv[i], tol)
            jv -= 1
        out_nr[g] = cnt
        if cnt >= min_rows:
            _side_solve(R, W, cs, tol, beta, cnt, actR, zsR, zkR, grpR, permR, full, keeper, R2, W2, cs2, r2)
            out_right[g] = _factor_rss(RV, WV, rsv, beta)
            betaR[g, :] = beta
        else:
            out_right[g] = np.inf
        while ii >= 0 and xf[of[ii]] == s:
            i = of[ii]
            for k in range(M):
                x[k] = BfR[i, k]
            _add_row(R, W, cs, rs, x, yf[i], tol)
            ii -= 1
            cnt += 1
    return U


@njit(cache=True, nogil=True)
def _merge_gap_candidates(U, s, rl, rr, nl, nr, betaL, betaR, BvL, BvR, yv, xv, ov,
                          c_s, c_l, c_r, c_nl, c_nr):
    """Add the distinct validation values lying strictly between two fitting
    values as candidates.

    Such a split has the same fitting rows on each side as the fitting value
    below it and only moves validation rows to the left, so its score follows
    from that candidate's coefficients.  Output is in increasing value order.
    """
    nv = ov.shape[0]
    M = BvL.shape[1]
    C = 0
    jv = 0
    for g in range(U):
        c_s[C] = s[g]; c_l[C] = rl[g]; c_r[C] = rr[g]; c_nl[C] = nl[g]; c_nr[C] = nr[g]
        C += 1
        while jv < nv and xv[ov[jv]] <= s[g]:
            jv += 1
        if g == U - 1:
            continue
        ok = np.isfinite(rl[g]) and np.isfinite(rr[g])
        gl = rl[g]
        gr = rr[g]
        while jv < nv and xv[ov[jv]] < s[g + 1]:
            v = xv[ov[jv]]
            while jv < nv and xv[ov[jv]] == v:
                if ok:
                    i = ov[jv]
                    el = yv[i]
                    er = yv[i]
                    for k in range(M):
                        el -= BvL[i, k] * betaL[g, k]
                        er -= BvR[i, k] * betaR[g, k]
                    gl += el * el
                    gr -= er * er
                jv += 1
            c_s[C] = v; c_l[C] = gl; c_r[C] = max(gr, 0.0) if ok else gr; c_nl[C] = nl[g]; c_nr[C] = nr[g]
            C += 1
    return C


@dataclass
class ScanResult:
    """Per-candidate output of one column's scan (kept for diagnostics/tests)."""

    values: np.ndarray
    rss_left: np.ndarray
    rss_right: np.ndarray
    n_left: np.ndarray
    n_right: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.rss_left + self.rss_right


def _first_reach(counts: np.ndarray, level: int) -> np.ndarray:
    """Per column, the number of rows after which ``counts`` first reaches ``level``."""
    out = np.full(counts.shape[1], np.iinfo(np.int64).max, dtype=np.int64)
    if counts.shape[0]:
        hit = counts[-1] >= level
        out[hit] = np.argmax(counts[:, hit] >= level, axis=0) + 1
    return out


def _sweep_plan(B_sorted: np.ndarray, span: int, groups: np.ndarray):
    """Column order and usability thresholds for rows arriving in ``B_sorted`` order.

    A column activates once ``span`` of the rows seen so far are non-zero in
    it (the intercept, column 0, always is).  While its number of zero rows
    is at least 1 but below ``span`` it is usable as ``supported_columns`` decides.
    """
    nz = B_sorted != 0.0
    act = _first_reach(np.cumsum(nz, axis=0), span)
    act[0] = 0
    zeros = np.cumsum(~nz, axis=0)
    zs = _first_reach(zeros, 1)
    zk = _first_reach(zeros, span)
    perm = np.argsort(act, kind="stable")
    return perm, act[perm], zs[perm], zk[perm], groups[perm]


def scan_column(Bf, yf, xf, Bv, yv, xv, min_rows: int, span: int = 1, groups=None) -> ScanResult:
    """Held-out RSS of every split of one column.

    Candidates are the distinct fitting values plus the distinct validation
    values that fall between two fitting values.  Without the latter a
    validation row in the gap next to a jump can only be routed to the wrong
    side, which on a jump much larger than the noise decides the search.

    On each side only the columns accepted by ``supported_columns`` for that
    side's fitting rows are fitted (``span=1`` fits every column that is not
    identically zero).  ``groups`` is as in ``supported_columns``.
    """
    Bf = np.asarray(Bf, dtype=np.float64)
    Bv = np.asarray(Bv, dtype=np.float64)
    yf = np.ascontiguousarray(yf, dtype=np.float64)
    yv = np.ascontiguousarray(yv, dtype=np.float64)
    xf = np.ascontiguousarray(xf, dtype=np.float64)
    xv = np.ascontiguousarray(xv, dtype=np.float64)
    nf = Bf.shape[0]
    groups = _groups_or_default(groups, Bf.shape[1])
    of = np.argsort(xf, kind="stable")
    ov = np.argsort(xv, kind="stable")
    # rows enter the right sweep from the top, ties in reverse stable order
    permL, actL, zsL, zkL, grpL = _sweep_plan(Bf[of], span, groups)
    permR, actR, zsR, zkR, grpR = _sweep_plan(Bf[of[::-1]], span, groups)
    s = np.empty(nf)
    rl = np.empty(nf)
    rr = np.empty(nf)
    nl = np.empty(nf, dtype=np.int64)
    nr = np.empty(nf, dtype=np.int64)
    M = Bf.shape[1]
    betaL = np.zeros((nf, M))
    betaR = np.zeros((nf, M))
    BvL = np.ascontiguousarray(Bv[:, permL])
    BvR = np.ascontiguousarray(Bv[:, permR])
    U = _dual_scan(np.ascontiguousarray(Bf[:, permL]), BvL, actL, zsL, zkL, grpL, permL,
                   np.ascontiguousarray(Bf[:, permR]), BvR, actR, zsR, zkR, grpR, permR,
                   yf, xf, of, yv, xv, ov, int(min_rows), RANK_TOL, s, rl, rr, nl, nr, betaL, betaR)
    size = U + Bv.shape[0]
    c_s = np.empty(size)
    c_l = np.empty(size)
    c_r = np.empty(size)
    c_nl = np.empty(size, dtype=np.int64)
    c_nr = np.empty(size, dtype=np.int64)
    C = _merge_gap_candidates(U, s, rl, rr, nl, nr, betaL, betaR, BvL, BvR, yv, xv, ov,
                              c_s, c_l, c_r, c_nl, c_nr)
    return ScanResult(c_s[:C], c_l[:C], c_r[:C], c_nl[:C], c_nr[:C])


def term_groups(model: NodeModel) -> np.ndarray:
    """Per design column, an id shared by the terms built on the same features
    (the intercept, column 0, gets its own)."""
    ids = {(): 0}
    return np.array([0] + [ids.setdefault(tuple(sorted({f.feature for f in t.factors})), len(ids))
                           for t in model.terms], dtype=np.int64)


def _groups_or_default(groups, M: int) -> np.ndarray:
    if groups is None:
        return np.array([0] + [1] * (M - 1), dtype=np.int64)
    groups = np.ascontiguousarray(groups, dtype=np.int64)
    if groups.shape != (M,):
        raise ValueError(f"groups has shape {groups.shape}, expected ({M},)")
    return groups


def supported_columns(B: np.ndarray, span: int, groups=None, zero_rule: bool = True) -> np.ndarray:
    """Columns that can be fitted on the rows of ``B``.

    A column needs at least ``span`` non-zero rows.  With ``zero_rule``, a
    column with at least one but fewer than ``span`` zero rows (a hinge
    whose kink has only a handful of rows beyond it) is dropped when another
    kept column of its group can bend the fit at that kink: a column of the
    group without such a zero count, or an earlier one with it.  Alone in its
    group it stays, as it is then nearly linear on these rows.  ``groups``
    defaults to one group for all non-intercept columns; models pass
    ``term_groups``.  The intercept is always kept.
    """
    nz = np.count_nonzero(B, axis=0)
    zeros = B.shape[0] - nz
    keep = nz >= span
    keep[0] = True
    if zero_rule:
        groups = _groups_or_default(groups, B.shape[1])
        few = keep & (zeros > 0) & (zeros < span)
        few[0] = False
        full = {int(groups[j]) for j in np.flatnonzero(keep & ~few)[1:]}
        taken = set()
        for j in np.flatnonzero(few):
            g = int(groups[j])
            if g in full or g in taken:
                keep[j] = False
            else:
                taken.add(g)
    return keep


def _side_fit(B, y, span, groups=None) -> np.ndarray:
    keep = supported_columns(B, span, groups)
    beta = np.zeros(B.shape[1])
    beta[keep] = batch_ols(B[:, keep], y).coefficients
    return beta


def _categorical_candidates(d, Bf, yf, xf, Bv, yv, xv, min_rows, span, groups):
    out = []
    for level in np.unique(xf):
        lf = xf == level
        lv = xv == level
        total = 0.0
        ok = True
        for fmask, vmask in ((lf, lv), (~lf, ~lv)):
            if fmask.sum() < min_rows:
                ok = False
                break
            beta = _side_fit(Bf[fmask], yf[fmask], span, groups)
            res = yv[vmask] - Bv[vmask] @ beta
            total += float(res @ res)
        if ok:
            out.append(SplitCandidate(d, float(level), total, True, int(lf.sum()), int((~lf).sum())))
    return out


def fit_validation_split(n: int, n_params: int, config: TreeConfig, rng: np.random.Generator):
    """Row indices ``(fit, validation)``; the same full set twice for small nodes."""
    if n < config.small_node_factor * n_params:
        rows = np.arange(n)
        return rows, rows, True
    perm = rng.permutation(n)
    n_fit = int(round(config.fit_fraction * n))
    n_fit = min(max(n_fit, 1), n - 1)
    return np.sort(perm[:n_fit]), np.sort(perm[n_fit:]), False


def best_split(node_data: Dataset, model: NodeModel, config: TreeConfig,
               rng: Optional[np.random.Generator] = None,
               n_params: Optional[int] = None) -> Optional[SplitCandidate]:
    """Lowest held-out RSS split over all columns, or ``None`` if nothing is evaluable.

    ``n_params`` is the coefficient count behind the small-node protocol and
    the minimum side size (default: the model's own).  A side needs at least
    that many fitting rows.  Ties go to the lower column index, then the lower
    split value.
    """
    n_params = model.n_params if n_params is None else int(n_params)
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    X, y = node_data.X, node_data.y
    n = X.shape[0]
    D = design_matrix(model, X)
    fit, val, _ = fit_validation_split(n, n_params, config, rng)
    Bf, yf, Bv, yv = D[fit], y[fit], D[val], y[val]
    min_rows = n_params
    span = config.span_for(node_data)
    groups = term_groups(model)

    def per_column(d):
        xf, xv = X[fit, d], X[val, d]
        if node_data.is_categorical(d):
            cands = _categorical_candidates(d, Bf, yf, xf, Bv, yv, xv, min_rows, span, groups)
            return min(cands, key=lambda c: (c.validation_rss, c.value), default=None)
        res = scan_column(Bf, yf, xf, Bv, yv, xv, min_rows, span, groups)
        tot = res.total
        if tot.size == 0 or not np.isfinite(tot).any():
            return None
        g = int(np.argmin(tot))  # first minimum is the lowest value
        return SplitCandidate(d, float(res.values[g]), max(float(tot[g]), 0.0), False,
                              int(res.n_left[g]), int(res.n_right[g]))

    best = None
    for cand in _ordered_map(per_column, range(X.shape[1])):
        if cand is None:
            continue
        if best is None or cand.validation_rss < best.validation_rss:
            best = cand
    if best is None:
        return None
    # replace the factor-based score by a direct residual evaluation
    left_f = best.goes_left(X[fit, best.variable])
    left_v = best.goes_left(X[val, best.variable])
    rss = 0.0
    for fm, vm in ((left_f, left_v), (~left_f, ~left_v)):
        beta = _side_fit(Bf[fm], yf[fm], span, groups)
        res = yv[vm] - Bv[vm] @ beta
        rss += float(res @ res)
    return SplitCandidate(best.variable, best.value, rss, best.categorical, best.n_left, best.n_right)


# --------------------------------------------------------------------------
# Cross-validation gate
# --------------------------------------------------------------------------

def cv_rss(node_data: Dataset, model: NodeModel, candidate: SplitCandidate,
           config: TreeConfig, rng: Optional[np.random.Generator] = None):
    """``(cv_unsplit, cv_split)``: summed held-fold RSS without and with the split."""
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    X, y = node_data.X, node_data.y
    n = X.shape[0]
    D = design_matrix(model, X)
    left = candidate.goes_left(X[:, candidate.variable])
    span = config.span_for(node_data)
    groups = term_groups(model)
    folds = np.array_split(rng.permutation(n), config.cv_folds)
    unsplit = 0.0
    split = 0.0
    for held in folds:
        if held.size == 0:
            continue
        train = np.ones(n, dtype=bool)
        train[held] = False
        beta0 = _side_fit(D[train], y[train], span, groups)
        res = y[held] - D[held] @ beta0
        unsplit += float(res @ res)
        for side in (left, ~left):
            hs = held[side[held]]
            if hs.size == 0:
                continue
            tr = train & side
            if tr.any():
                beta = _side_fit(D[tr], y[tr], span, groups)
            else:
                beta = beta0
            res = y[hs] - D[hs] @ beta
            split += float(res @ res)
    return unsplit, split


def confirm_split(node_data: Dataset, model: NodeModel, candidate: SplitCandidate,
                  config: TreeConfig, rng: Optional[np.random.Generator] = None) -> bool:
    unsplit, split = cv_rss(node_data, model, candidate, config, rng)
    return _gate(unsplit, split, config.cv_improvement_threshold, _rss_floor(node_data.y))


def _rss_floor(y: np.ndarray) -> float:
    # below this the unsplit fit is exact up to rounding and nothing is left to explain
    return 1e-20 * float(y @ y)


def _gate(unsplit: float, split: float, threshold: float, floor: float = 0.0) -> bool:
    if not unsplit > floor:
        return False
    return (unsplit - split) / unsplit >= threshold


# --------------------------------------------------------------------------
# Growth and prediction
# --------------------------------------------------------------------------

def node_rng(seed: int, path: Sequence[int]) -> np.random.Generator:
    """Independent stream for the node reached by ``path`` (1 = left, 2 = right)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *path]))


def grow(data: Dataset, model: NodeModel, config: Optional[TreeConfig] = None) -> TreeNode:
    """Depth-first growth from the root; every leaf gets a refit copy of ``model``.

    The node-size guards keep using the full model's coefficient count below
    nodes whose model lost terms to ``trim_terms``; otherwise a trimmed,
    near intercept-only child could be split down to single rows.
    """
    config = config or TreeConfig()
    return _grow(data, np.arange(data.n), model, config, (), model.n_params)


def _grow(data: Dataset, rows: np.ndarray, model: NodeModel, config: TreeConfig, path,
          n_params: int) -> TreeNode:
    X, y = data.X[rows], data.y[rows]
    here = refit_xy(model, X, y)
    n = rows.size
    if n < n_params or not math.isfinite(config.cv_improvement_threshold):
        return Leaf(here, rows)
    node = data.subset(rows)
    rng = node_rng(config.rng_seed, path)
    cand = best_split(node, here, config, rng, n_params)
    if cand is None:
        return Leaf(here, rows)
    unsplit, split = cv_rss(node, here, cand, config, rng)
    if not _gate(unsplit, split, config.cv_improvement_threshold, _rss_floor(y)):
        return Leaf(here, rows)
    left = cand.goes_left(X[:, cand.variable])
    span = config.span_for(data)
    return Split(
        cand,
        _grow(data, rows[left], trim_terms(here, X[left], span), config, path + (1,), n_params),
        _grow(data, rows[~left], trim_terms(here, X[~left], span), config, path + (2,), n_params),
        unsplit,
        split,
    )


def trim_terms(model: NodeModel, X: np.ndarray, span: int) -> NodeModel:
    """Drop the terms with fewer than ``span`` non-zero rows in ``X``.

    A hinge with only a few zero rows stays: it is nearly linear here, and
    dropping it would remove its variable from the whole subtree.
    """
    keep = supported_columns(design_matrix(model, X), span, zero_rule=False)[1:]
    if keep.all():
        return model
    terms = tuple(t for t, k in zip(model.terms, keep) if k)
    return NodeModel(model.intercept, terms, (0.0,) * len(terms))


def predict_tree(root: TreeNode, row) -> float:
    node = root
    row = np.asarray(row, dtype=np.float64)
    while not node.is_leaf:
        x = row[node.split.variable]
        node = node.left if bool(node.split.goes_left(np.asarray(x))) else node.right
    return float(predict_model(node.model, row[None, :])[0])


def predict_tree_matrix(root: TreeNode, X) -> np.ndarray:
    X = np.asarray(getattr(X, "X", X), dtype=np.float64)
    out = np.empty(X.shape[0])
    _route(root, X, np.arange(X.shape[0]), out)
    return out


def _route(node, X, idx, out):
    if idx.size == 0:
        return
    if node.is_leaf:
        out[idx] = predict_model(node.model, X[idx])
        return
    left = node.split.goes_left(X[idx, node.split.variable])
    _route(node.left, X, idx[left], out)
    _route(node.right, X, idx[~left], out)


def leaves(root: TreeNode) -> List[Leaf]:
    if root.is_leaf:
        return [root]
    return leaves(root.left) + leaves(root.right)


def splits(root: TreeNode) -> List[SplitCandidate]:
    """Internal-node splits in depth-first (pre-)order."""
    if root.is_leaf:
        return []
    return [root.split] + splits(root.left) + splits(root.right)


def tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"model": node.model.to_dict()}
    d = {"variable": node.split.variable, "value": node.split.value}
    if node.split.categorical:
        d["categorical"] = True
    d["left"] = tree_to_dict(node.left)
    d["right"] = tree_to_dict(node.right)
    return d


def tree_from_dict(d: dict) -> TreeNode:
    if "model" in d:
        return Leaf(NodeModel.from_dict(d["model"]))
    cand = SplitCandidate(int(d["variable"]), float(d["value"]), 0.0, bool(d.get("categorical", False)))
    return Split(cand, tree_from_dict(d["left"]), tree_from_dict(d["right"]))
