"""Tree-family classifiers, evaluation, ablation and model persistence."""

from .ablation import (
    DEFAULT_COMBOS,
    DEFAULT_MIN_CONFIDENCE,
    AblationRow,
    RiskScore,
    fit_model,
    flag,
    model_matrix,
    prepare_split,
    run_ablation,
    score_editors,
    write_ablation_csv,
)
from .ensemble import KINDS, Hyperparams, TrainedModel, adaboost_alpha, train
from .evaluation import EvalReport, SplitSpec, evaluate, report_from_confusion, split
from .io import load_model, save_model
from .tree import Tree, grow_tree

__all__ = [
    "DEFAULT_COMBOS",
    "DEFAULT_MIN_CONFIDENCE",
    "KINDS",
    "AblationRow",
    "EvalReport",
    "Hyperparams",
    "RiskScore",
    "SplitSpec",
    "TrainedModel",
    "Tree",
    "adaboost_alpha",
    "evaluate",
    "fit_model",
    "flag",
    "grow_tree",
    "load_model",
    "model_matrix",
    "prepare_split",
    "report_from_confusion",
    "run_ablation",
    "save_model",
    "score_editors",
    "split",
    "train",
    "write_ablation_csv",
]
