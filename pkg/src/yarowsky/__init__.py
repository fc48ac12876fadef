"""Yarowsky-style bootstrapping and label propagation on instance/feature graphs."""

from .bootstrap import IterationTrace, LabelingState, relabel_step, run
from .distributions import PsiKind
from .graph import BipartiteGraph, RecordError, SeedLabels, build_graph, pad_to_uniform_degree, read_tsv
from .learners import CountStats, LearnerKind, SmoothingConfig
from .propagation import NodeAssignment, OperatorKind, propagate

__all__ = [
    "BipartiteGraph",
    "CountStats",
    "IterationTrace",
    "LabelingState",
    "LearnerKind",
    "NodeAssignment",
    "OperatorKind",
    "PsiKind",
    "RecordError",
    "SeedLabels",
    "SmoothingConfig",
    "build_graph",
    "pad_to_uniform_degree",
    "propagate",
    "read_tsv",
    "relabel_step",
    "run",
]

__version__ = "0.1.0"
