"""Hinge/linear basis functions, product terms and per-node additive models.

A :class:`NodeModel` is ``intercept + sum(coef_m * term_m(x))`` where each term
is a product of factors, each factor being ``x_j``, ``max(x_j - t, 0)`` or
``max(t - x_j, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

LINEAR = "Linear"
HINGE_POS = "HingePos"
HINGE_NEG = "HingeNeg"
KINDS = (LINEAR, HINGE_POS, HINGE_NEG)
_KIND_RANK = {k: i for i, k in enumerate(KINDS)}


class StructuralError(ValueError):
    """A term or model refers to columns the data does not have."""


@dataclass(frozen=True)
class Factor:
    kind: str
    feature: int
    knot: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown factor kind {self.kind!r}")
        if self.feature < 0:
            raise StructuralError(f"negative feature index {self.feature}")
        if self.kind == LINEAR:
            object.__setattr__(self, "knot", None)
        else:
            if self.knot is None or not math.isfinite(self.knot):
                raise ValueError("hinge factors need a finite knot")
            object.__setattr__(self, "knot", float(self.knot))

    @property
    def is_hinge(self) -> bool:
        return self.kind != LINEAR

    def sort_key(self):
        return (self.feature, _KIND_RANK[self.kind], -math.inf if self.knot is None else self.knot)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Evaluate on every row of ``X`` (2-D)."""
        if self.feature >= X.shape[1]:
            raise StructuralError(
                f"factor uses feature {self.feature} but data has {X.shape[1]} columns"
            )
        x = X[:, self.feature]
        if self.kind == LINEAR:
            return x.copy()
        if self.kind == HINGE_POS:
            return np.maximum(x - self.knot, 0.0)
        return np.maximum(self.knot - x, 0.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "feature": self.feature, "knot": self.knot}

    @classmethod
    def from_dict(cls, d: dict) -> "Factor":
        return cls(d["kind"], int(d["feature"]), d.get("knot"))

    def __str__(self):
        name = f"x{self.feature + 1}"
        if self.kind == LINEAR:
            return name
        if self.kind == HINGE_POS:
            return f"({name} - {self.knot:.4g})+"
        return f"({self.knot:.4g} - {name})+"


def eval_factor(factor: Factor, row: Sequence[float]) -> float:
    """Scalar evaluation of one factor at one feature vector."""
    if factor.feature >= len(row):
        raise StructuralError(
            f"factor uses feature {factor.feature} but row has {len(row)} entries"
        )
    x = float(row[factor.feature])
    if factor.kind == LINEAR:
        return x
    if factor.kind == HINGE_POS:
        return max(x - factor.knot, 0.0)
    return max(factor.knot - x, 0.0)


@dataclass(frozen=True)
class BasisTerm:
    """Product of one or more factors, stored in canonical (sorted) order."""

    factors: Tuple[Factor, ...]

    def __post_init__(self):
        factors = tuple(sorted(self.factors, key=Factor.sort_key))
        if not factors:
            raise ValueError("a basis term needs at least one factor")
        if len(set(factors)) != len(factors):
            raise ValueError("a basis term cannot repeat an identical factor")
        object.__setattr__(self, "factors", factors)

    @property
    def degree(self) -> int:
        return len(self.factors)

    @property
    def features(self) -> frozenset:
        return frozenset(f.feature for f in self.factors)

    def knots(self):
        return {(f.feature, f.knot) for f in self.factors if f.is_hinge}

    def times(self, factor: Factor) -> "BasisTerm":
        return BasisTerm(self.factors + (factor,))

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        out = self.factors[0].evaluate(X)
        for f in self.factors[1:]:
            out *= f.evaluate(X)
        return out

    def to_dict(self) -> dict:
        return {"factors": [f.to_dict() for f in self.factors]}

    @classmethod
    def from_dict(cls, d: dict) -> "BasisTerm":
        return cls(tuple(Factor.from_dict(f) for f in d["factors"]))

    def __str__(self):
        return "*".join(str(f) for f in self.factors)


def term(*factors: Factor) -> BasisTerm:
    return BasisTerm(tuple(factors))


@dataclass(frozen=True)
class NodeModel:
    intercept: float = 0.0
    terms: Tuple[BasisTerm, ...] = ()
    coefficients: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(
            self, "coefficients", tuple(float(c) for c in self.coefficients)
        )
        object.__setattr__(self, "intercept", float(self.intercept))
        if len(self.coefficients) != len(self.terms):
            raise ValueError(
                f"{len(self.terms)} terms but {len(self.coefficients)} coefficients"
            )

    @property
    def n_params(self) -> int:
        """Coefficient count including the intercept."""
        return 1 + len(self.terms)

    @property
    def knot_count(self) -> int:
        """Distinct (feature, knot) pairs used by hinge factors across all terms."""
        knots = set()
        for t in self.terms:
            knots |= t.knots()
        return len(knots)

    @property
    def max_feature(self) -> int:
        return max((f.feature for t in self.terms for f in t.factors), default=-1)

    def with_coefficients(self, beta: Sequence[float]) -> "NodeModel":
        """Copy with ``beta = [intercept, coef_1, ..., coef_M]``."""
        beta = np.asarray(beta, dtype=np.float64)
        return NodeModel(float(beta[0]), self.terms, tuple(beta[1:]))

    def with_terms(self, terms: Iterable[BasisTerm]) -> "NodeModel":
        """Same intercept, new basis with zero coefficients (to be refit)."""
        terms = tuple(terms)
        return NodeModel(self.intercept, terms, (0.0,) * len(terms))

    @property
    def beta(self) -> np.ndarray:
        return np.array((self.intercept,) + self.coefficients)

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "terms": [t.to_dict() for t in self.terms],
            "coefficients": list(self.coefficients),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NodeModel":
        return cls(
            float(d["intercept"]),
            tuple(BasisTerm.from_dict(t) for t in d["terms"]),
            tuple(float(c) for c in d["coefficients"]),
        )

    def __str__(self):
        parts = [f"{self.intercept:.4g}"]
        for c, t in zip(self.coefficients, self.terms):
            parts.append(f"{c:+.4g}*{t}")
        return " ".join(parts)


def _as_matrix(data) -> np.ndarray:
    X = getattr(data, "X", data)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    return X


def design_matrix(model: NodeModel, data) -> np.ndarray:
    """``n x (1 + M)`` matrix: a ones column followed by one column per term."""
    X = _as_matrix(data)
    if model.max_feature >= X.shape[1]:
        raise StructuralError(
            f"model uses feature {model.max_feature} but data has {X.shape[1]} columns"
        )
    B = np.empty((X.shape[0], model.n_params))
    B[:, 0] = 1.0
    for m, t in enumerate(model.terms):
        B[:, m + 1] = t.evaluate(X)
    return B


def predict(model: NodeModel, data) -> np.ndarray:
    """Vectorised prediction over the rows of ``data``."""
    return design_matrix(model, data) @ model.beta


def predict_row(model: NodeModel, row: Sequence[float]) -> float:
    total = model.intercept
    for c, t in zip(model.coefficients, model.terms):
        v = 1.0
        for f in t.factors:
            v *= eval_factor(f, row)
        total += c * v
    return total
