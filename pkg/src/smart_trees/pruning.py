"""Backward deletion pass applied independently to every leaf model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.linalg import solve_triangular

from .basis import NodeModel, design_matrix
from .data import Dataset
from .forward import ForwardConfig, gcv_or_inf, refit_xy
from .qr import independent_columns
from .tree import Leaf, Split, TreeNode


@dataclass
class PruneStep:
    terms: tuple  # indices into the original model's terms
    rss: float
    gcv: float


def _state_fit(Rfull, z, resid0, active):
    """RSS of the sub-model on columns ``active`` and the RSS increase of
    removing each of them (zero for columns that are linearly redundant)."""
    Rs = Rfull[:, active]
    kept = independent_columns(Rs)
    delta = np.zeros(len(active))
    if kept.size == 0:
        return resid0 + float(z @ z), delta
    Q, Rk = np.linalg.qr(Rs[:, kept])
    qz = Q.T @ z
    beta = solve_triangular(Rk, qz)
    resid = z - Rs[:, kept] @ beta
    rss = resid0 + float(resid @ resid)
    Rinv = solve_triangular(Rk, np.eye(kept.size))
    diag = (Rinv * Rinv).sum(axis=1)
    delta[kept] = beta * beta / diag
    return rss, delta


def deletion_sequence(model: NodeModel, X: np.ndarray, y: np.ndarray, gcv_penalty: float) -> List[PruneStep]:
    """States visited by greedy deletion, from the full model down to the intercept."""
    D = design_matrix(model, X)
    n, p = D.shape
    Q, Rfull = np.linalg.qr(D)
    z = Q.T @ y
    resid0 = max(float(y @ y) - float(z @ z), 0.0)
    active = list(range(p))
    steps = []
    while True:
        rss, delta = _state_fit(Rfull, z, resid0, active)
        terms = tuple(j - 1 for j in active[1:])
        sub = NodeModel(0.0, tuple(model.terms[t] for t in terms), (0.0,) * len(terms))
        c = sub.n_params + gcv_penalty * sub.knot_count
        steps.append(PruneStep(terms, rss, gcv_or_inf(rss, n, c)))
        if len(active) == 1:
            break
        # cheapest deletion; ties go to the earliest-added term
        pos = min(range(1, len(active)), key=lambda i: (delta[i], i))
        del active[pos]
    return steps


def prune_leaf(model: NodeModel, leaf_data, config: Optional[ForwardConfig] = None) -> NodeModel:
    """Sub-model of minimum GCV along the deletion sequence, refit on ``leaf_data``.

    Sub-models whose effective parameter count reaches the row count are
    never selected.  Near-ties (within 1e-10 of the intercept-only GCV) go to
    the smaller model.
    """
    config = config or ForwardConfig()
    X = getattr(leaf_data, "X", leaf_data)
    y = leaf_data.y
    if len(y) == 0:
        raise ValueError("prune_leaf needs at least one row")
    if not model.terms:
        return refit_xy(model, X, y)
    steps = deletion_sequence(model, X, y, config.gcv_penalty)
    finite = [s for s in steps if math.isfinite(s.gcv)]
    if not finite:
        chosen = steps[-1]
    else:
        best = min(s.gcv for s in finite)
        tol = 1e-10 * max(steps[-1].gcv if math.isfinite(steps[-1].gcv) else 0.0, 1e-300)
        chosen = min((s for s in finite if s.gcv <= best + tol), key=lambda s: len(s.terms))
    terms = tuple(model.terms[t] for t in sorted(chosen.terms))
    return refit_xy(NodeModel(0.0, terms, (0.0,) * len(terms)), X, y)


def prune_tree(root: TreeNode, data: Dataset, config: Optional[ForwardConfig] = None) -> TreeNode:
    """Prune every leaf on the training rows that reach it; splits are untouched."""
    config = config or ForwardConfig()
    return _prune(root, data, np.arange(data.n), config)


def _prune(node, data, rows, config):
    if node.is_leaf:
        return Leaf(prune_leaf(node.model, data.subset(rows), config), rows)
    left = node.split.goes_left(data.X[rows, node.split.variable])
    return Split(
        node.split,
        _prune(node.left, data, rows[left], config),
        _prune(node.right, data, rows[~left], config),
        node.cv_unsplit,
        node.cv_split,
    )
