"""Gradient-boosted regression trees on the logistic loss.

Two variants share the loop. ``plain`` fits each tree by least squares to
the negative gradient ``y - p`` and keeps the leaf means. ``regularized``
scores splits with first and second derivatives and sets each leaf to
``-G / (H + lam)``.
"""

from __future__ import annotations

import numpy as np

from .._math import log_odds, sigmoid
from ..errors import SingleClass
from .tree import DecisionTree, grow_tree

VARIANTS = ("plain", "regularized")


class GbtModel:
    kind = "gbt"

    def __init__(
        self,
        n_rounds: int = 50,
        learning_rate: float = 0.1,
        max_depth: int = 3,
        variant: str = "plain",
        lam: float = 1.0,
        min_samples_leaf: int = 1,
        subsample: float = 1.0,
        seed: int = 0,
    ):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if not 0 < learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0 < subsample <= 1:
            raise ValueError("subsample must lie in (0, 1]")
        self.n_rounds = int(n_rounds)
        self.learning_rate = float(learning_rate)
        self.max_depth = max_depth
        self.variant = variant
        self.lam = float(lam)
        self.min_samples_leaf = int(min_samples_leaf)
        self.subsample = float(subsample)
        self.seed = int(seed)
        self.f0 = 0.0
        self.trees: list[DecisionTree] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        p = y.mean()
        if p in (0.0, 1.0):
            raise SingleClass("boosting needs both classes")
        self.f0 = log_odds(p)
        self.trees = []
        rng = np.random.default_rng(self.seed)
        F = np.full(len(y), self.f0)
        n = len(y)
        for _ in range(self.n_rounds):
            prob = sigmoid(F)
            if self.subsample < 1.0:
                rows = np.sort(rng.choice(n, size=max(1, int(round(self.subsample * n))), replace=False))
            else:
                rows = np.arange(n)
            if self.variant == "plain":
                g, h, lam, sign = (y - prob)[rows], np.ones(len(rows)), 0.0, 1.0
            else:
                g, h, lam, sign = (prob - y)[rows], (prob * (1 - prob))[rows], self.lam, -1.0
            tree = grow_tree(
                X[rows], g, h, lam=lam, leaf_sign=sign,
                max_depth=self.max_depth, min_samples_leaf=self.min_samples_leaf,
            )
            self.trees.append(tree)
            F += self.learning_rate * tree.predict(X)
        return self

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        F = np.full(X.shape[0], self.f0)
        for tree in self.trees:
            F += self.learning_rate * tree.predict(X)
        return F

    def staged_scores(self, X):
        X = np.asarray(X, dtype=np.float64)
        F = np.full(X.shape[0], self.f0)
        yield sigmoid(F)
        for tree in self.trees:
            F = F + self.learning_rate * tree.predict(X)
            yield sigmoid(F)

    def score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        s = sigmoid(self.decision_function(X[None, :] if single else X))
        return s[0] if single else s

    def to_dict(self):
        return {
            "hyperparameters": {
                "n_rounds": self.n_rounds,
                "learning_rate": self.learning_rate,
                "max_depth": self.max_depth,
                "variant": self.variant,
                "lam": self.lam,
                "min_samples_leaf": self.min_samples_leaf,
                "subsample": self.subsample,
                "seed": self.seed,
            },
            "parameters": {"f0": self.f0, "trees": [t.to_dict() for t in self.trees]},
        }

    @classmethod
    def from_dict(cls, d):
        m = cls(**d["hyperparameters"])
        m.f0 = float(d["parameters"]["f0"])
        m.trees = [DecisionTree.from_dict(t) for t in d["parameters"]["trees"]]
        return m


def gbt_train(X, y, n_rounds=50, learning_rate=0.1, max_depth=3, variant="plain", lam=1.0, seed=0, **kw):
    return GbtModel(n_rounds, learning_rate, max_depth, variant, lam, seed=seed, **kw).fit(X, y)


def gbt_score(model: GbtModel, x):
    return model.score(x)
