"""From-scratch binary classifiers with real-valued decision scores.

Every trained model exposes ``decision_score(X)`` (higher means more NTL-like)
and ``threshold``, the operating point used for confusion-based scoring: 0.5
for the probability-like tree models, 0 for the SVM margin.
"""
from __future__ import annotations

import json

import numpy as np

from ._backend import BACKEND
from .metrics import (ConfusionCounts, SingleClassInput, UndefinedClassRate, balanced_auc,
                      confusion_at_threshold, logistic_loss, roc_auc_rank)
from .standardize import StandardizationParams, apply_standardizer, fit_standardizer
from .svm import LinearSVMModel, SVMParams, train_linear_svm
from .trees import (ForestParams, GBTModel, GBTParams, Tree, TreeEnsembleModel, TreeParams,
                    train_decision_tree, train_gbt, train_random_forest)

MODEL_KINDS = ("dt", "rf", "gbt", "lsvm")
MODEL_FORMAT_VERSION = 1

_PARAMS = {"dt": TreeParams, "rf": ForestParams, "gbt": GBTParams, "lsvm": SVMParams}
_TRAIN = {"dt": train_decision_tree, "rf": train_random_forest, "gbt": train_gbt,
          "lsvm": train_linear_svm}


def make_params(kind: str, hp: dict | None = None):
    if kind not in _PARAMS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    return _PARAMS[kind](**(hp or {}))


def train(kind: str, X, y, hp=None, seed: int = 0):
    params = hp if isinstance(hp, tuple(_PARAMS.values())) else make_params(kind, hp)
    return _TRAIN[kind](X, y, params, seed)


def score(model, X, y) -> float:
    """Balanced AUC of ``model`` on ``(X, y)`` at its own threshold."""
    return balanced_auc(confusion_at_threshold(model.decision_score(X), y, model.threshold))


def dump_model(model) -> str:
    """Versioned JSON text dump, meant for debugging rather than as a stable API."""
    payload = {"format": "ntlfresh-model", "version": MODEL_FORMAT_VERSION}
    payload.update(model.to_dict())
    return json.dumps(payload, indent=1, sort_keys=True)


def load_model(text: str):
    d = json.loads(text)
    if d.get("format") != "ntlfresh-model" or d.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError("not a model dump of a supported version")
    kind = d["kind"]
    params = make_params(kind, d["params"])
    if kind in ("dt", "rf"):
        return TreeEnsembleModel(kind, params, [Tree.from_dict(t) for t in d["trees"]])
    if kind == "gbt":
        return GBTModel(params, d["prior"], [Tree.from_dict(t) for t in d["trees"]])
    return LinearSVMModel(params, np.asarray(d["weights"], dtype=np.float64), d["bias"])


__all__ = [
    "BACKEND", "MODEL_KINDS", "ConfusionCounts", "ForestParams", "GBTModel", "GBTParams",
    "LinearSVMModel", "SVMParams", "SingleClassInput", "StandardizationParams", "Tree",
    "TreeEnsembleModel", "TreeParams", "UndefinedClassRate", "apply_standardizer",
    "balanced_auc", "confusion_at_threshold", "dump_model", "fit_standardizer", "load_model",
    "logistic_loss", "make_params", "roc_auc_rank", "score", "train", "train_decision_tree",
    "train_gbt", "train_linear_svm", "train_random_forest",
]
