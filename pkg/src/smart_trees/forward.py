"""Greedy forward pass of adaptive regression splines, GCV and coefficient refits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from numba import njit

from .basis import HINGE_NEG, HINGE_POS, LINEAR, BasisTerm, Factor, NodeModel, design_matrix
from .data import Dataset
from .qr import RANK_TOL, batch_ols

# Hinge columns whose component outside the current span is below this
# fraction of their squared norm are treated as already represented.
_DEN_TOL = 1e-8


class ModelTooComplex(ValueError):
    """Effective parameter count reached the number of observations."""


@dataclass
class ForwardConfig:
    max_terms: int = 100
    max_degree: int = 2
    min_rss_decrease: float = 1e-4
    min_rsq_gain: float = 1e-3
    gcv_penalty: Optional[float] = None
    minspan: Optional[int] = None
    endspan: Optional[int] = None
    span_alpha: float = 0.05
    gcv_stop: bool = True

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if self.max_degree < 1:
            raise ValueError("max_degree must be >= 1")
        if self.min_rss_decrease < 0:
            raise ValueError("min_rss_decrease must be >= 0")
        if self.min_rsq_gain < 0:
            raise ValueError("min_rsq_gain must be >= 0")
        if self.gcv_penalty is None:
            self.gcv_penalty = 3.0 if self.max_degree > 1 else 2.0
        if self.gcv_penalty < 0:
            raise ValueError("gcv_penalty must be >= 0")
        for name in ("minspan", "endspan"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1 (or None for automatic)")
        if not 0.0 < self.span_alpha < 1.0:
            raise ValueError("span_alpha must lie in (0, 1)")

    def spans(self, n_features: int, support: int):
        """``(endspan, minspan)`` for a parent with ``support`` non-zero rows.

        Automatic values follow Friedman's rule of thumb: keep knots away from
        the ends and from each other so that no hinge can isolate a short run
        of observations (significance level ``span_alpha``).
        """
        p = max(n_features, 1)
        a = self.span_alpha
        end = self.endspan if self.endspan is not None else auto_endspan(p, a)
        mins = self.minspan
        if mins is None:
            mins = max(1, int(round(-math.log2(-math.log(1.0 - a) / (p * max(support, 1))) / 2.5)))
        return end, mins


def auto_endspan(n_features: int, alpha: float = 0.05) -> int:
    """Rows to keep between a knot and the end of the data (Friedman's rule)."""
    return max(1, int(round(3.0 - math.log2(alpha / max(n_features, 1)))))


def gcv(rss: float, n: int, effective_params: float) -> float:
    """Generalized cross-validation: ``rss / (1 - C/n)**2``."""
    if n < 1:
        raise ValueError("gcv needs n >= 1")
    if effective_params >= n:
        raise ModelTooComplex(f"{effective_params} effective parameters for {n} observations")
    return rss / (1.0 - effective_params / n) ** 2


def effective_params(model: NodeModel, gcv_penalty: float) -> float:
    """Coefficient count plus ``gcv_penalty`` per distinct knot."""
    return model.n_params + gcv_penalty * model.knot_count


def gcv_or_inf(rss: float, n: int, c: float) -> float:
    return math.inf if c >= n else gcv(rss, n, c)


def refit(model: NodeModel, data) -> NodeModel:
    """Same basis, coefficients re-estimated by least squares on ``data``."""
    X = getattr(data, "X", data)
    y = data.y
    if len(y) < 1:
        raise ValueError("refit needs at least one row")
    stats = batch_ols(design_matrix(model, X), y)
    return model.with_coefficients(stats.coefficients)


def refit_xy(model: NodeModel, X, y) -> NodeModel:
    stats = batch_ols(design_matrix(model, X), y)
    return model.with_coefficients(stats.coefficients)


@njit(cache=True, nogil=True)
def _scan_candidates(X, order, B, parents, feats, Q, r, endspan, minspan,
                     lin_gain, hinge_gain, knot, lin_ok):
    """Score every (parent, feature) pair.

    For each pair, ``lin_gain`` is the RSS drop from adding ``parent * x`` and
    ``hinge_gain``/``knot`` the best further drop from ``parent * (x - t)_+``
    over knots ``t`` (together the two columns span the reflected pair).
    Knot sums are carried relative to the current knot while sweeping rows in
    descending ``x`` so every knot costs O(rank).
    """
    n = X.shape[0]
    rk = Q.shape[1]
    S = np.empty(rk + 1)
    a = np.empty(rk + 1)
    b = np.empty(rk + 1)
    u = np.empty(n)
    rs = np.empty(n)
    coef = np.empty(rk)
    for c in range(parents.shape[0]):
        p = parents[c]
        v = feats[c]
        # --- linear column parent * x, orthogonalised twice against Q
        unorm2 = 0.0
        for i in range(n):
            u[i] = B[i, p] * X[i, v]
            unorm2 += u[i] * u[i]
        for _ in range(2):
            for l in range(rk):
                coef[l] = 0.0
            for i in range(n):
                ui = u[i]
                if ui != 0.0:
                    for l in range(rk):
                        coef[l] += Q[i, l] * ui
            for i in range(n):
                acc = u[i]
                for l in range(rk):
                    acc -= Q[i, l] * coef[l]
                u[i] = acc
        rem2 = 0.0
        for i in range(n):
            rem2 += u[i] * u[i]
        ok = unorm2 > 0.0 and rem2 > (RANK_TOL * RANK_TOL) * unorm2
        lin_ok[c] = ok
        if ok:
            inv = 1.0 / math.sqrt(rem2)
            ur = 0.0
            for i in range(n):
                u[i] *= inv
                ur += u[i] * r[i]
            lin_gain[c] = ur * ur
            for i in range(n):
                rs[i] = r[i] - u[i] * ur
        else:
            lin_gain[c] = 0.0
            for i in range(n):
                u[i] = 0.0
                rs[i] = r[i]
        # --- knot sweep over rows with parent != 0, descending x
        ordv = order[v]
        cnt = 0
        for ii in range(n):
            if B[ordv[ii], p] != 0.0:
                cnt += 1
        best_gain = 0.0
        best_t = np.nan
        es = endspan[c]
        ms = minspan[c]
        if cnt >= 2 * es + 1:
            C0 = 0.0
            D1 = 0.0
            cc = 0.0
            rc = 0.0
            r0 = 0.0
            for l in range(rk + 1):
                a[l] = 0.0
                b[l] = 0.0
            seen = 0
            last = -1
            t_prev = np.nan
            ii = n - 1
            while ii >= 0:
                i0 = ordv[ii]
                if B[i0, p] == 0.0:
                    ii -= 1
                    continue
                t = X[i0, v]
                if seen > 0:
                    delta = t_prev - t
                    cc += 2.0 * delta * D1 + delta * delta * C0
                    D1 += delta * C0
                    rc += delta * r0
                    for l in range(rk + 1):
                        a[l] += delta * b[l]
                    # knot t: seen rows strictly above, rows at t and below remain
                    if (seen >= es and cnt - seen >= es and cc > 0.0
                            and (last < 0 or seen - last >= ms)):
                        last = seen
                        proj = 0.0
                        for l in range(rk + 1):
                            proj += a[l] * a[l]
                        den = cc - proj
                        if den > _DEN_TOL * cc:
                            g = rc * rc / den
                            if g > best_gain:
                                best_gain = g
                                best_t = t
                # fold every row with value t (offset zero at this knot)
                while ii >= 0:
                    i = ordv[ii]
                    pi = B[i, p]
                    if pi == 0.0:
                        ii -= 1
                        continue
                    if X[i, v] != t:
                        break
                    for l in range(rk):
                        S[l] = Q[i, l]
                    S[rk] = u[i]
                    C0 += pi * pi
                    r0 += rs[i] * pi
                    for l in range(rk + 1):
                        b[l] += S[l] * pi
                    seen += 1
                    ii -= 1
                t_prev = t
        hinge_gain[c] = best_gain
        knot[c] = best_t


def _orthonormal_append(Q: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Extend orthonormal ``Q`` with the new directions of ``cols``."""
    cur = Q
    for j in range(cols.shape[1]):
        v = cols[:, j].copy()
        norm = math.sqrt(v @ v)
        if norm == 0.0:
            continue
        for _ in range(2):
            if cur.shape[1]:
                v -= cur @ (cur.T @ v)
        rem = math.sqrt(v @ v)
        if rem > RANK_TOL * norm:
            cur = np.column_stack([cur, v / rem]) if cur.shape[1] else (v / rem)[:, None]
    return np.ascontiguousarray(cur)


@dataclass
class ForwardTrace:
    rss: List[float] = field(default_factory=list)
    stop_reason: str = ""


def forward_pass(data: Dataset, config: Optional[ForwardConfig] = None,
                 trace: Optional[ForwardTrace] = None) -> NodeModel:
    """Grow a spline model greedily from the intercept.

    Each step scores, for every eligible parent term and continuous feature
    not already in that parent, the reflected hinge pair at every interior
    observed value of the feature, and keeps the lowest-RSS option.  The
    winner's plain linear variant replaces the pair when its GCV is lower.
    """
    config = config or ForwardConfig()
    X = data.X
    y = data.y
    n = X.shape[0]
    if n < 2:
        raise ValueError("forward_pass needs at least two rows")
    if X.shape[1] < 1:
        raise ValueError("forward_pass needs at least one feature column")
    features = [j for j in range(X.shape[1]) if not data.is_categorical(j)]
    order = np.ascontiguousarray(
        np.stack([np.argsort(X[:, j], kind="stable") for j in range(X.shape[1])])
    )

    terms: List[BasisTerm] = []
    B = np.ones((n, 1))
    Q = np.ones((n, 1)) / math.sqrt(n)
    r = y - Q @ (Q.T @ y)
    rss = float(r @ r)
    trace = trace if trace is not None else ForwardTrace()
    trace.rss.append(rss)
    pen = config.gcv_penalty

    def state_gcv(n_terms, n_knots, rss_):
        return gcv_or_inf(rss_, n, 1 + n_terms + pen * n_knots)

    tss = rss
    rss_floor = 1e-12 * rss
    gcv_null = state_gcv(0, 0, rss)
    knots_used = set()
    while True:
        slots = config.max_terms - 1 - len(terms)
        if slots < 1:
            trace.stop_reason = "max_terms"
            break
        if rss <= rss_floor:
            trace.stop_reason = "zero_rss"
            break
        parent_ids = [0] + [m + 1 for m, t in enumerate(terms) if t.degree < config.max_degree]
        pairs = [
            (p, v)
            for p in parent_ids
            for v in features
            if p == 0 or v not in terms[p - 1].features
        ]
        if not pairs:
            trace.stop_reason = "no_candidates"
            break
        parents = np.array([p for p, _ in pairs], dtype=np.int64)
        feats = np.array([v for _, v in pairs], dtype=np.int64)
        k = len(pairs)
        lin_gain = np.zeros(k)
        hinge_gain = np.zeros(k)
        knot = np.full(k, np.nan)
        lin_ok = np.zeros(k, dtype=np.bool_)
        support = {p: int(np.count_nonzero(B[:, p])) for p in parent_ids}
        spans = np.array([config.spans(len(features), support[p]) for p, _ in pairs], dtype=np.int64)
        _scan_candidates(X, order, np.ascontiguousarray(B), parents, feats, Q, r,
                         spans[:, 0].copy(), spans[:, 1].copy(), lin_gain, hinge_gain, knot, lin_ok)
        total = lin_gain + hinge_gain
        c = int(np.argmax(total))
        if total[c] <= 0.0:
            trace.stop_reason = "no_improvement"
            break
        p, v = pairs[c]
        parent = None if p == 0 else terms[p - 1]

        def grow(factor):
            return BasisTerm((factor,)) if parent is None else parent.times(factor)

        options = []
        if lin_ok[c]:
            options.append(([grow(Factor(LINEAR, v))], lin_gain[c], set()))
        if hinge_gain[c] > 0.0:
            t = float(knot[c])
            hinge_terms = [grow(Factor(HINGE_POS, v, t))]
            if lin_ok[c]:
                hinge_terms.append(grow(Factor(HINGE_NEG, v, t)))
            new_knots = {(v, t)} | (parent.knots() if parent else set())
            options.append((hinge_terms, total[c], new_knots))
        options = [o for o in options if len(o[0]) <= slots]
        if not options:
            trace.stop_reason = "max_terms"
            break
        scored = []
        for new_terms, gain, new_knots in options:
            new_rss = max(rss - gain, 0.0)
            kn = len(knots_used | new_knots)
            scored.append((state_gcv(len(terms) + len(new_terms), kn, new_rss), new_rss, new_terms, new_knots))
        # linear first in `options`, so equal GCV keeps the smaller model
        best = min(range(len(scored)), key=lambda i: (scored[i][0], i))
        cand_gcv, new_rss, new_terms, new_knots = scored[best]
        if (rss - new_rss) / rss < config.min_rss_decrease:
            trace.stop_reason = "min_rss_decrease"
            break
        if rss - new_rss < config.min_rsq_gain * tss:
            trace.stop_reason = "min_rsq_gain"
            break
        if config.gcv_stop:
            # no better than predicting the mean, or no degrees of freedom left
            if not math.isfinite(cand_gcv) or cand_gcv >= gcv_null:
                trace.stop_reason = "gcv"
                break
        cols = np.column_stack([t.evaluate(X) for t in new_terms])
        terms.extend(new_terms)
        knots_used |= new_knots
        B = np.column_stack([B, cols])
        Q = _orthonormal_append(Q, cols)
        r = y - Q @ (Q.T @ y)
        rss = float(r @ r)
        trace.rss.append(rss)

    model = NodeModel(0.0, tuple(terms), (0.0,) * len(terms))
    return refit_xy(model, X, y)
