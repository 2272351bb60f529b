from __future__ import annotations

import numpy as np

from .._math import sigmoid
from ..errors import SingleClass


class LinearSvmModel:
    """Linear SVM trained by stochastic subgradient descent on the L2-regularised hinge loss.

    Features are standardised internally and a constant column stands in for
    the bias (so the bias is shrunk along with the weights). After training
    the scaling is folded back so ``margin = X @ w + b`` on raw features.
    """

    kind = "svm"

    def __init__(self, lam: float = 1e-3, epochs: int = 20, seed: int = 0):
        if lam <= 0:
            raise ValueError("lam must be > 0")
        self.lam = float(lam)
        self.epochs = int(epochs)
        self.seed = int(seed)
        self.w = None
        self.b = 0.0

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if len(np.unique(y)) < 2:
            raise SingleClass("SVM training needs both classes")
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        Z = np.hstack([(X - mean) / scale, np.ones((X.shape[0], 1))])
        sign = np.where(y == 1, 1.0, -1.0)

        rng = np.random.default_rng(self.seed)
        v = np.zeros(Z.shape[1])
        t = 0
        for _ in range(self.epochs):
            for i in rng.permutation(Z.shape[0]):
                t += 1
                eta = 1.0 / (self.lam * t)
                violated = sign[i] * (Z[i] @ v) < 1.0
                v *= 1.0 - eta * self.lam
                if violated:
                    v += eta * sign[i] * Z[i]

        self.w = v[:-1] / scale
        self.b = float(v[-1] - self.w @ mean)
        return self

    def margin(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.w + self.b

    def score(self, X) -> np.ndarray:
        return sigmoid(self.margin(X))

    def to_dict(self):
        return {
            "hyperparameters": {"lam": self.lam, "epochs": self.epochs, "seed": self.seed},
            "parameters": {"w": self.w.tolist(), "b": self.b},
        }

    @classmethod
    def from_dict(cls, d):
        m = cls(**d["hyperparameters"])
        m.w = np.asarray(d["parameters"]["w"], dtype=np.float64)
        m.b = float(d["parameters"]["b"])
        return m


def svm_train(X, y, lam=1e-3, epochs=20, seed=0) -> LinearSvmModel:
    return LinearSvmModel(lam, epochs, seed).fit(X, y)


def svm_score(model: LinearSvmModel, x):
    return model.score(x)
