"""Spline-based regression trees: a MARS forward pass whose coefficients are
refit inside tree partitions found by an incremental-QR split search, then
pruned leaf by leaf."""

from .basis import BasisTerm, Factor, NodeModel, StructuralError, design_matrix, predict
from .data import Dataset
from .datagen import generate
from .forward import ForwardConfig, forward_pass
from .model import SmartModel, fit
from .pruning import prune_leaf, prune_tree
from .tree import TreeConfig, best_split, confirm_split, grow

__version__ = "0.1.0"

__all__ = [
    "BasisTerm",
    "Dataset",
    "Factor",
    "ForwardConfig",
    "NodeModel",
    "SmartModel",
    "StructuralError",
    "TreeConfig",
    "best_split",
    "confirm_split",
    "design_matrix",
    "fit",
    "forward_pass",
    "generate",
    "grow",
    "predict",
    "prune_leaf",
    "prune_tree",
]
