"""End-to-end estimator: forward pass, tree growth, per-leaf pruning, persistence."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .basis import predict
from .data import Dataset
from .forward import ForwardConfig, forward_pass
from .pruning import prune_tree
from .tree import TreeConfig, TreeNode, grow, leaves, predict_tree_matrix, splits, tree_from_dict, tree_to_dict

FORMAT_VERSION = 1
DEFAULT_SEED = 0


@dataclass
class Stages:
    """Intermediate models kept for stage-by-stage diagnostics."""

    forward: object
    grown: TreeNode
    pruned: Optional[TreeNode]


@dataclass
class SmartModel:
    root: TreeNode
    forward_config: ForwardConfig
    tree_config: TreeConfig
    prune: bool = True
    seed: int = DEFAULT_SEED
    feature_names: List[str] = field(default_factory=list)
    categorical: List[int] = field(default_factory=list)
    target: str = "y"
    stages: Optional[Stages] = field(default=None, repr=False, compare=False)

    def predict(self, X) -> np.ndarray:
        return predict_tree_matrix(self.root, X)

    @property
    def n_leaves(self) -> int:
        return len(leaves(self.root))

    @property
    def splits(self):
        return splits(self.root)

    def summary(self) -> str:
        lines = [f"leaves: {self.n_leaves}  splits: {len(self.splits)}"]
        for s in self.splits:
            name = self.feature_names[s.variable] if self.feature_names else f"x{s.variable + 1}"
            op = "==" if s.categorical else "<="
            lines.append(f"  split {name} {op} {s.value:.6g}")
        for i, leaf in enumerate(leaves(self.root)):
            lines.append(f"  leaf {i}: {len(leaf.model.terms)} terms")
        return "\n".join(lines)

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "seed": int(self.seed),
            "target": self.target,
            "feature_names": list(self.feature_names),
            "categorical": [int(j) for j in self.categorical],
            "config": {
                "forward": asdict(self.forward_config),
                "tree": {k: _json_float(v) for k, v in asdict(self.tree_config).items()},
                "prune": bool(self.prune),
            },
            "tree": tree_to_dict(self.root),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SmartModel":
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported model format_version {version!r} (expected {FORMAT_VERSION})")
        cfg = d["config"]
        tree_cfg = {k: _from_json_float(v) for k, v in cfg["tree"].items()}
        return cls(
            root=tree_from_dict(d["tree"]),
            forward_config=ForwardConfig(**cfg["forward"]),
            tree_config=TreeConfig(**tree_cfg),
            prune=bool(cfg["prune"]),
            seed=int(d["seed"]),
            feature_names=list(d["feature_names"]),
            categorical=list(d["categorical"]),
            target=d["target"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, allow_nan=False)

    @classmethod
    def loads(cls, text: str) -> "SmartModel":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SmartModel":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def _json_float(v):
    # json has no infinity; the gate threshold may legitimately be +inf
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _from_json_float(v):
    return float(v) if v in ("inf", "-inf") else v


def fit(data: Dataset, forward_config: Optional[ForwardConfig] = None,
        tree_config: Optional[TreeConfig] = None, prune: bool = True,
        seed: Optional[int] = None, target: str = "y",
        forward_model=None) -> SmartModel:
    """Train a model on ``data``.

    ``seed`` overrides ``tree_config.rng_seed``.  A precomputed forward-pass
    model may be passed in to share it between runs that differ only in the
    tree or pruning settings.
    """
    forward_config = forward_config or ForwardConfig()
    tree_config = tree_config or TreeConfig()
    if seed is not None:
        tree_config = TreeConfig(**{**asdict(tree_config), "rng_seed": int(seed)})
    base = forward_model if forward_model is not None else forward_pass(data, forward_config)
    grown = grow(data, base, tree_config)
    pruned = prune_tree(grown, data, forward_config) if prune else None
    names = list(data.names) if data.names else [f"x{j + 1}" for j in range(data.width)]
    return SmartModel(
        root=pruned if prune else grown,
        forward_config=forward_config,
        tree_config=tree_config,
        prune=prune,
        seed=tree_config.rng_seed,
        feature_names=names,
        categorical=[j for j in range(data.width) if data.is_categorical(j)],
        target=target,
        stages=Stages(base, grown, pruned),
    )


def stage_predictions(model: SmartModel, X) -> Dict[str, np.ndarray]:
    """Predictions of the forward model, the grown tree and the final tree."""
    if model.stages is None:
        raise ValueError("model carries no training stages (was it loaded from disk?)")
    st = model.stages
    out = {
        "forward": predict(st.forward, X),
        "split": predict_tree_matrix(st.grown, X),
    }
    out["pruned"] = predict_tree_matrix(st.pruned, X) if st.pruned is not None else out["split"]
    return out
