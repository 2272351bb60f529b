from __future__ import annotations

import math

import numpy as np

from ..errors import EmptyTrainingSet
from .tree import DecisionTree, grow_tree


class RandomForestModel:
    """Bagged Gini trees; the score is the mean of the trees' leaf class fractions."""

    kind = "rf"

    def __init__(
        self,
        n_trees: int = 50,
        max_depth: int | None = None,
        max_features: int | None = None,
        min_samples_leaf: int = 1,
        bootstrap: bool = True,
        seed: int = 0,
    ):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        self.n_trees = int(n_trees)
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_leaf = int(min_samples_leaf)
        self.bootstrap = bool(bootstrap)
        self.seed = int(seed)
        self.trees: list[DecisionTree] = []
        self.tree_seeds: list[int] = []
        self.m = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n, n_features = X.shape
        if n == 0:
            raise EmptyTrainingSet("random forest needs at least one training row")
        self.m = self.max_features or max(1, int(round(math.sqrt(n_features))))
        self.m = min(self.m, n_features)
        master = np.random.default_rng(self.seed)
        self.tree_seeds = [int(s) for s in master.integers(0, 2**63 - 1, size=self.n_trees)]
        self.trees = []
        ones = np.ones(n)
        for ts in self.tree_seeds:
            rng = np.random.default_rng(ts)
            rows = rng.integers(0, n, size=n) if self.bootstrap else np.arange(n)
            self.trees.append(grow_tree(
                X[rows], y[rows], ones,
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                max_features=self.m,
                rng=rng,
            ))
        return self

    def score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = X[None, :] if single else X
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        s = total / len(self.trees)
        return s[0] if single else s

    def to_dict(self):
        return {
            "hyperparameters": {
                "n_trees": self.n_trees,
                "max_depth": self.max_depth,
                "max_features": self.max_features,
                "min_samples_leaf": self.min_samples_leaf,
                "bootstrap": self.bootstrap,
                "seed": self.seed,
            },
            "parameters": {
                "m": self.m,
                "tree_seeds": self.tree_seeds,
                "trees": [t.to_dict() for t in self.trees],
            },
        }

    @classmethod
    def from_dict(cls, d):
        m = cls(**d["hyperparameters"])
        p = d["parameters"]
        m.m = p["m"]
        m.tree_seeds = list(p["tree_seeds"])
        m.trees = [DecisionTree.from_dict(t) for t in p["trees"]]
        return m


def rf_train(X, y, n_trees=50, max_depth=None, m=None, seed=0, **kw) -> RandomForestModel:
    return RandomForestModel(n_trees, max_depth, m, seed=seed, **kw).fit(X, y)


def rf_score(model: RandomForestModel, x):
    return model.score(x)
