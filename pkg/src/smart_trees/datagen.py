"""Deterministic generators for the benchmark datasets.

Random numbers come from the Philox4x64-10 counter-based generator keyed by
the seed.  Uniforms use the top 53 bits of each 64-bit output; normals use the
Box-Muller transform on consecutive uniform pairs.  Every generator draws its
feature columns first (column by column) and the noise last, so a given
``(name, n, seed)`` always yields the same bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .data import Dataset

_TWO_M53 = 1.0 / 9007199254740992.0


class Stream:
    """Uniform and normal draws from a Philox stream."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bits = np.random.Philox(key=self.seed & 0xFFFFFFFFFFFFFFFF)

    def raw(self, size: int) -> np.ndarray:
        return self._bits.random_raw(size)

    def uniform(self, size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self.raw(size) >> np.uint64(11)).astype(np.float64) * _TWO_M53
        return low + (high - low) * u

    def normal(self, size: int, sigma: float = 1.0) -> np.ndarray:
        m = (size + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1]
        u2 = self.uniform(m)
        rad = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * m)
        z[0::2] = rad * np.cos(2.0 * np.pi * u2)
        z[1::2] = rad * np.sin(2.0 * np.pi * u2)
        return sigma * z[:size]


def _finish(X, truth, stream, sigma, seed, name, **meta) -> Dataset:
    noise = stream.normal(X.shape[0], sigma) if sigma > 0 else np.zeros(X.shape[0])
    return Dataset(X=X, y=truth + noise, truth=truth, seed=seed, meta={"name": name, "sigma": sigma, **meta})


# --- Piecewise example with jumps at 2 and 4 --------------------------------

def visual_truth(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.where(x < 2, np.sin(np.pi * x), np.where(x < 4, 4 * x, 0.2 * np.exp(x - 3)))


def gen_visual(n: int = 200, seed: int = 0, sigma: float = 1.0) -> Dataset:
    if n < 1:
        raise ValueError("n must be >= 1")
    s = Stream(seed)
    x = s.uniform(n, 0.0, 6.0)
    return _finish(x[:, None], visual_truth(x), s, sigma, seed, "visual")


# --- Friedman suites -----------------------------------------------------------

def friedman1_truth(X: np.ndarray) -> np.ndarray:
    return (10 * np.sin(np.pi * X[:, 0] * X[:, 1]) + 20 * (X[:, 2] - 0.5) ** 2
            + 10 * X[:, 3] + 5 * X[:, 4])


def gen_friedman1(n: int = 1000, d: int = 10, sigma: float = 5.0, seed: int = 0) -> Dataset:
    if d < 5:
        raise ValueError("Friedman 1 needs d >= 5")
    s = Stream(seed)
    X = np.column_stack([s.uniform(n) for _ in range(d)])
    return _finish(X, friedman1_truth(X), s, sigma, seed, "friedman1", d=d)


def _friedman23_inputs(n: int, s: Stream) -> np.ndarray:
    x1 = s.uniform(n, 0.0, 100.0)
    while np.any(x1 == 0.0):
        bad = x1 == 0.0
        x1[bad] = s.uniform(int(bad.sum()), 0.0, 100.0)
    x2 = s.uniform(n, 40 * np.pi, 560 * np.pi)
    x3 = s.uniform(n, 0.0, 1.0)
    x4 = s.uniform(n, 1.0, 11.0)
    return np.column_stack([x1, x2, x3, x4])


def _friedman_inner(X):
    return X[:, 1] * X[:, 2] - 1.0 / (X[:, 1] * X[:, 3])


def friedman2_truth(X: np.ndarray) -> np.ndarray:
    return np.sqrt(X[:, 0] ** 2 + _friedman_inner(X) ** 2)


def friedman3_truth(X: np.ndarray) -> np.ndarray:
    return np.arctan(_friedman_inner(X) / X[:, 0])


def gen_friedman2(n: int = 1000, sigma: float = 5.0, seed: int = 0) -> Dataset:
    s = Stream(seed)
    X = _friedman23_inputs(n, s)
    return _finish(X, friedman2_truth(X), s, sigma, seed, "friedman2")


def gen_friedman3(n: int = 1000, sigma: float = 5.0, seed: int = 0) -> Dataset:
    s = Stream(seed)
    X = _friedman23_inputs(n, s)
    return _finish(X, friedman3_truth(X), s, sigma, seed, "friedman3")


# --- Piecewise synthetic suite --------------------------------------------------
#
# A component is (kind, column, coef, extra): kind in {"lin", "sq", "cube",
# "hpos", "hneg", "log", "inter"}; hinge components carry the knot in `extra`.

Component = Tuple[str, int, float, float]


def _eval_components(X: np.ndarray, comps: Sequence[Component]) -> np.ndarray:
    out = np.zeros(X.shape[0])
    for kind, j, a, extra in comps:
        x = X[:, j]
        if kind == "lin":
            out += a * x
        elif kind == "sq":
            out += a * x ** 2
        elif kind == "cube":
            out += a * x ** 3
        elif kind == "hpos":
            out += a * np.maximum(x - extra, 0.0)
        elif kind == "hneg":
            out += a * np.maximum(extra - x, 0.0)
        elif kind == "log":
            out += a * np.log(x + 1.0)
        elif kind == "inter":
            out += a * X[:, 0] * X[:, 1]
        else:
            raise ValueError(kind)
    return out


@dataclass(frozen=True)
class PiecewiseRecipe:
    """Two additive branches switched on one column at a threshold.

    ``ranges`` gives the uniform sampling interval per column.  Rows with
    ``x[split_var] <= threshold`` use ``left`` (or, when ``ge`` is set, rows
    with ``x >= threshold`` use ``left``).
    """

    intercept: float
    ranges: Tuple[Tuple[float, float], ...]
    split_var: int
    threshold: float
    left: Tuple[Component, ...]
    right: Tuple[Component, ...]
    ge: bool = False

    def truth(self, X: np.ndarray) -> np.ndarray:
        x = X[:, self.split_var]
        first = x >= self.threshold if self.ge else x <= self.threshold
        return self.intercept + np.where(
            first, _eval_components(X, self.left), _eval_components(X, self.right)
        )


_LIN = (-10.0, 10.0)
_SQ = (-3.0, 3.0)
_CUBE = (-2.0, 2.0)
_HINGE = (-10.0, 10.0)
_LOG = (0.0, 10.0)

SYNTHETIC_RECIPES: Dict[int, PiecewiseRecipe] = {
    1: PiecewiseRecipe(
        -1.2, (_CUBE, _SQ, _SQ, _HINGE, _LOG), 0, 1.6,
        (("cube", 0, -3.1, 0), ("sq", 1, 2.1, 0), ("sq", 2, -3.7, 0),
         ("hpos", 3, 2.0, 1.2), ("hneg", 3, 1.5, 1.2), ("log", 4, 3.0, 0),
         ("inter", 0, -0.5, 0)),
        (("cube", 0, -3.9, 0), ("sq", 1, -0.6, 0), ("sq", 2, 2.9, 0),
         ("hpos", 3, 3.0, 1.2), ("hneg", 3, 1.3, 1.2), ("log", 4, 2.4, 0),
         ("inter", 0, 0.3, 0)),
    ),
    2: PiecewiseRecipe(
        2.1, (_LIN, _LIN, _LIN, _HINGE, _LOG), 1, 8.0,
        (("lin", 0, -2.7, 0), ("lin", 1, 1.3, 0), ("lin", 2, -1.9, 0),
         ("hpos", 3, 2.7, 2.4), ("hneg", 3, -2.4, 1.2), ("log", 4, 2.2, 0),
         ("inter", 0, -0.2, 0)),
        (("lin", 0, 3.7, 0), ("lin", 1, 3.6, 0), ("lin", 2, -2.0, 0),
         ("hpos", 3, -3.2, 2.4), ("hneg", 3, 2.8, 2.4), ("log", 4, -2.2, 0),
         ("inter", 0, 1.0, 0)),
    ),
    3: PiecewiseRecipe(
        -4.3, (_CUBE, _CUBE, _LIN, _HINGE, _HINGE, _LOG), 2, 8.0,
        (("cube", 0, -2.7, 0), ("cube", 1, 2.7, 0), ("lin", 2, -0.7, 0),
         ("hpos", 3, 2.4, 4.4), ("hneg", 3, 0.4, 4.4), ("hpos", 4, 2.3, 2.9),
         ("hneg", 4, -1.8, 2.9), ("log", 5, -3.2, 0), ("inter", 0, -0.2, 0)),
        (("cube", 0, -1.6, 0), ("cube", 1, -3.4, 0), ("lin", 2, -2.9, 0),
         ("hpos", 3, -1.0, 4.4), ("hneg", 3, -2.1, 4.4), ("hpos", 4, 3.0, 2.9),
         ("hneg", 4, -1.8, 2.9), ("log", 5, 3.9, 0), ("inter", 0, -0.2, 0)),
    ),
    4: PiecewiseRecipe(
        6.7, (_SQ, _SQ, _LIN, _HINGE, _HINGE, _LOG), 0, -2.4,
        (("sq", 0, -1.4, 0), ("sq", 1, -3.7, 0), ("lin", 2, 2.4, 0),
         ("hpos", 3, -3.2, -2.8), ("hneg", 3, -1.4, -2.8), ("hpos", 4, -1.0, -4.4),
         ("hneg", 4, -1.2, -4.4), ("log", 5, -1.0, 0), ("inter", 0, 0.8, 0)),
        (("sq", 0, 1.4, 0), ("sq", 1, 0.7, 0), ("lin", 2, 2.8, 0),
         ("hpos", 3, -3.4, -2.8), ("hneg", 3, -1.4, -2.8), ("hpos", 4, 0.4, -4.4),
         ("hneg", 4, -2.5, -4.4), ("log", 5, -3.5, 0), ("inter", 0, 0.8, 0)),
        ge=True,
    ),
    5: PiecewiseRecipe(
        3.1, (_SQ, _CUBE, _LIN, _LIN, _LIN, _HINGE, _LOG), 4, 8.0,
        (("sq", 0, 3.3, 0), ("cube", 1, -1.0, 0), ("lin", 2, -0.8, 0),
         ("lin", 3, -2.1, 0), ("lin", 4, 2.4, 0), ("hpos", 5, -1.4, -7.2),
         ("hneg", 5, -1.4, -7.2), ("log", 6, -1.0, 0), ("inter", 0, -0.9, 0)),
        (("sq", 0, -3.5, 0), ("cube", 1, -3.2, 0), ("lin", 2, -0.5, 0),
         ("lin", 3, -0.9, 0), ("lin", 4, 1.5, 0), ("hpos", 5, -2.1, -7.2),
         ("hneg", 5, 3.3, -7.2), ("log", 6, -0.5, 0), ("inter", 0, 0.4, 0)),
    ),
}


def _recipe_dataset(recipe: PiecewiseRecipe, n: int, sigma: float, seed: int, name: str, **meta) -> Dataset:
    s = Stream(seed)
    X = np.column_stack([s.uniform(n, lo, hi) for lo, hi in recipe.ranges])
    return _finish(X, recipe.truth(X), s, sigma, seed, name,
                   split_var=recipe.split_var, threshold=recipe.threshold, **meta)


def gen_synthetic(k: int, n: int = 5000, seed: int = 0, sigma: float = 10.0) -> Dataset:
    """One of the five fixed piecewise equations (``k`` in 1..5)."""
    if k not in SYNTHETIC_RECIPES:
        raise ValueError(f"synthetic equation must be 1..5, got {k}")
    return _recipe_dataset(SYNTHETIC_RECIPES[k], n, sigma, seed, f"synthetic{k}", k=k)


def _coef(s: Stream) -> float:
    mag = float(s.uniform(1, 0.4, 4.0)[0])
    return mag if s.uniform(1)[0] < 0.5 else -mag


def sample_recipe(seed: int) -> PiecewiseRecipe:
    """Random piecewise recipe: 3-5 power terms, 1-2 hinge terms, a log term,
    an ``x1*x2`` interaction, and a switch that puts about 10% of rows on the
    re-randomised branch."""
    s = Stream(seed)
    n_pow = 3 + int(s.uniform(1)[0] * 3)
    n_hinge = 1 + int(s.uniform(1)[0] * 2)
    shapes, ranges = [], []
    for _ in range(n_pow):
        kind = ("lin", "sq", "cube")[int(s.uniform(1)[0] * 3)]
        shapes.append(kind)
        ranges.append({"lin": _LIN, "sq": _SQ, "cube": _CUBE}[kind])
    knots = []
    for _ in range(n_hinge):
        shapes.append("hinge")
        ranges.append(_HINGE)
        knots.append(float(s.uniform(1, -8.0, 8.0)[0]))
    shapes.append("log")
    ranges.append(_LOG)

    def branch():
        comps = []
        hk = iter(knots)
        for j, kind in enumerate(shapes):
            if kind == "hinge":
                t = next(hk)
                comps.append(("hpos", j, _coef(s), t))
                comps.append(("hneg", j, _coef(s), t))
            else:
                comps.append((kind, j, _coef(s), 0.0))
        comps.append(("inter", 0, _coef(s) / 4.0, 0.0))
        return tuple(comps)

    left = branch()
    right = branch()
    split_var = int(s.uniform(1)[0] * len(shapes))
    lo, hi = ranges[split_var]
    threshold = lo + 0.9 * (hi - lo)
    intercept = float(s.uniform(1, -20.0, 20.0)[0])
    return PiecewiseRecipe(intercept, tuple(ranges), split_var, threshold, left, right)


def gen_recipe(seed: int, n: int = 5000, sigma: float = 10.0, data_seed: Optional[int] = None) -> Dataset:
    recipe = sample_recipe(seed)
    return _recipe_dataset(recipe, n, sigma, seed if data_seed is None else data_seed,
                           "recipe", recipe_seed=seed)


# --- Four-leaf tree --------------------------------------------------------------

def tree_truth(X: np.ndarray) -> np.ndarray:
    x1, x2, x3, x4 = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
    return np.where(x4 > 0, np.where(x2 > 0, x1, x2), np.where(x1 > 0, x3, x4))


def gen_tree_dataset(n: int = 20000, seed: int = 0, sigma: float = 1.0) -> Dataset:
    s = Stream(seed)
    X = np.column_stack([s.uniform(n, -2.0, 2.0) for _ in range(4)])
    return _finish(X, tree_truth(X), s, sigma, seed, "tree")


GENERATORS: Dict[str, Callable[..., Dataset]] = {
    "visual": gen_visual,
    "friedman1": gen_friedman1,
    "friedman2": gen_friedman2,
    "friedman3": gen_friedman3,
    "tree": gen_tree_dataset,
    **{f"synthetic{k}": (lambda k_: (lambda n=5000, seed=0, sigma=10.0: gen_synthetic(k_, n, seed, sigma)))(k)
       for k in SYNTHETIC_RECIPES},
}


def generate(name: str, **params) -> Dataset:
    if name not in GENERATORS:
        raise ValueError(f"unknown dataset {name!r}; choose from {sorted(GENERATORS)}")
    return GENERATORS[name](**params)
