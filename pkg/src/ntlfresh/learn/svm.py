"""Linear SVM trained with epoch-wise Pegasos subgradient steps."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..rng import derive_seed, make_generator
from ._backend import kernels
from .metrics import SingleClassInput


@dataclass(frozen=True)
class SVMParams:
    lam: float = 0.01
    epochs: int = 100
    project: bool = True

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("regularization must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


def svm_objective(w, X, y_pm, lam) -> float:
    """``lam/2 * |w|^2 + mean(hinge)``; the bias is the last entry of ``w``."""
    margins = y_pm * (X @ w[:-1] + w[-1])
    return float(0.5 * lam * np.dot(w, w) + np.maximum(0.0, 1.0 - margins).mean())


@dataclass
class LinearSVMModel:
    params: SVMParams
    weights: np.ndarray
    bias: float
    kind: str = "lsvm"
    threshold: float = 0.0
    objective_end: list[float] = field(default_factory=list)
    objective_avg: list[float] = field(default_factory=list)

    def decision_score(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": asdict(self.params), "threshold": self.threshold,
                "weights": self.weights.tolist(), "bias": self.bias}


def train_linear_svm(X, y, params: SVMParams = SVMParams(), seed: int = 0):
    """Hinge loss + L2 on ``[w, b]``. The bias is treated as the weight of a
    constant unit feature and regularized with the rest.

    Returns the last iterate. Per epoch, the model records the objective of
    the last iterate (``objective_end``) and of the running average of all
    iterates so far (``objective_avg``).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if np.unique(y).shape[0] < 2:
        raise SingleClassInput("SVM needs both classes")
    y_pm = np.where(y == 1, 1.0, -1.0)
    n, n_features = X.shape
    gen = make_generator(derive_seed(seed, "svm-order"))
    order = np.array([gen.permutation(n) for _ in range(params.epochs)],
                     dtype=np.int64).reshape(params.epochs, n)
    if params.epochs == 0:
        return LinearSVMModel(params, np.zeros(n_features), 0.0)
    w_end, w_avg = kernels.pegasos(X, y_pm, order, params.lam, params.project)
    model = LinearSVMModel(params, w_end[-1, :-1].copy(), float(w_end[-1, -1]))
    model.objective_end = [svm_objective(w, X, y_pm, params.lam) for w in w_end]
    running = np.cumsum(w_avg, axis=0) / np.arange(1, params.epochs + 1)[:, None]
    model.objective_avg = [svm_objective(w, X, y_pm, params.lam) for w in running]
    return model
