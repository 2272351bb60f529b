from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch

METRICS = ("hamming", "euclidean")


class KnnModel:
    """k-nearest-neighbour scorer; equal distances favour the lower training index."""

    kind = "knn"

    def __init__(self, k: int = 5, metric: str = "hamming", chunk: int = 64):
        if k < 1 or k % 2 == 0:
            raise ValueError(f"k must be a positive odd integer, got {k}")
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}")
        self.k = int(k)
        self.metric = metric
        self.chunk = chunk
        self.X = None
        self.y = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if self.k > X.shape[0]:
            raise ValueError(f"k={self.k} exceeds the {X.shape[0]} training rows")
        self.X = X
        self.y = np.asarray(y, dtype=np.float64)
        return self

    def distances(self, Q) -> np.ndarray:
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim == 1:
            Q = Q[None, :]
        if Q.shape[1] != self.X.shape[1]:
            raise DimensionMismatch(f"expected {self.X.shape[1]} features, got {Q.shape[1]}")
        out = np.empty((Q.shape[0], self.X.shape[0]))
        for s in range(0, Q.shape[0], self.chunk):
            diff = Q[s:s + self.chunk, None, :] - self.X[None, :, :]
            if self.metric == "hamming":
                out[s:s + self.chunk] = np.count_nonzero(diff, axis=2)
            else:
                out[s:s + self.chunk] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        return out

    def score(self, Q) -> np.ndarray:
        """Fraction of the k nearest training rows labelled 1."""
        single = np.asarray(Q).ndim == 1
        d = self.distances(Q)
        nearest = np.argsort(d, axis=1, kind="stable")[:, : self.k]
        s = self.y[nearest].mean(axis=1)
        return s[0] if single else s

    def to_dict(self):
        return {
            "hyperparameters": {"k": self.k, "metric": self.metric},
            "parameters": {"X": self.X.tolist(), "y": self.y.tolist()},
        }

    @classmethod
    def from_dict(cls, d):
        m = cls(**d["hyperparameters"])
        m.X = np.asarray(d["parameters"]["X"], dtype=np.float64).reshape(len(d["parameters"]["y"]), -1)
        m.y = np.asarray(d["parameters"]["y"], dtype=np.float64)
        return m


def knn_classify(model: KnnModel, x) -> float:
    return float(model.score(np.asarray(x)[None, :])[0])
