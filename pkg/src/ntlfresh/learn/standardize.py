"""Column z-scoring fitted on training rows only."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StandardizationParams:
    mean: np.ndarray
    std: np.ndarray

    @property
    def constant_columns(self) -> np.ndarray:
        return self.std == 0.0


def fit_standardizer(matrix) -> StandardizationParams:
    X = np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("standardizer needs a non-empty 2-D matrix")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # float noise on constant columns
    std = np.where(np.ptp(X, axis=0) == 0.0, 0.0, std)
    return StandardizationParams(mean, std)


def apply_standardizer(params: StandardizationParams, matrix) -> np.ndarray:
    """Constant training columns map to zeros."""
    X = np.asarray(matrix, dtype=np.float64)
    scale = np.where(params.std > 0.0, params.std, 1.0)
    out = (X - params.mean) / scale
    out[:, params.std == 0.0] = 0.0
    return out
