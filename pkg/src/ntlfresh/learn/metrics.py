"""Confusion-based scores and the rank form of ROC-AUC."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import NtlError


class UndefinedClassRate(NtlError, ValueError):
    """Recall or specificity requested for a class with no samples."""


class SingleClassInput(NtlError, ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total

    def recall(self) -> float:
        if self.tp + self.fn == 0:
            raise UndefinedClassRate("no positive samples")
        return self.tp / (self.tp + self.fn)

    def specificity(self) -> float:
        if self.tn + self.fp == 0:
            raise UndefinedClassRate("no negative samples")
        return self.tn / (self.tn + self.fp)

    def precision(self) -> float:
        if self.tp + self.fp == 0:
            raise UndefinedClassRate("no positive predictions")
        return self.tp / (self.tp + self.fp)


def confusion_at_threshold(scores, labels, threshold: float) -> ConfusionCounts:
    """Predict positive iff ``score >= threshold``."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels must be aligned")
    pred = s >= threshold
    return ConfusionCounts(tp=int(np.sum(pred & y)), fp=int(np.sum(pred & ~y)),
                           tn=int(np.sum(~pred & ~y)), fn=int(np.sum(~pred & y)))


def balanced_auc(counts: ConfusionCounts) -> float:
    """``(recall + specificity) / 2`` at one operating point."""
    return (counts.recall() + counts.specificity()) / 2.0


def roc_auc_rank(scores, labels) -> float:
    """Mann-Whitney form: P(score_pos > score_neg), ties counted one half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(bool)
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassInput("ROC-AUC needs both classes")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    # midranks, 1-based
    ranks = np.empty(s.shape[0], dtype=np.float64)
    i = 0
    while i < sorted_s.shape[0]:
        j = i
        while j + 1 < sorted_s.shape[0] and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def logistic_loss(probabilities, labels) -> float:
    p = np.clip(np.asarray(probabilities, dtype=np.float64), 1e-15, 1 - 1e-15)
    y = np.asarray(labels, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log1p(-p)))
