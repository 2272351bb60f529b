"""Array-backed binary decision trees and the exhaustive split search behind them.

One split criterion serves every tree in the package. Each row carries a
first-order statistic ``g`` and a weight ``h``; a split is scored by

    G_L^2 / (H_L + lam) + G_R^2 / (H_R + lam) - G^2 / (H + lam)

With ``g = y, h = 1, lam = 0`` this ranks splits exactly like the decrease in
weighted Gini impurity for binary labels; with ``g = residual, h = 1`` it is
the least-squares variance reduction; with logistic gradients and hessians it
is the second-order regularized gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1
# relative slack under which two gains count as tied
_TIE_RTOL = 1e-9


@dataclass
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            n = node[active]
            go_left = X[active, self.feature[n]] <= self.threshold[n]
            node[active] = np.where(go_left, self.left[n], self.right[n])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            np.asarray(d["value"], dtype=np.float64),
        )


def best_split(X, g, h, features, lam=0.0, min_samples_leaf=1):
    """Return ``(gain, feature, threshold)`` of the best split, or None.

    Thresholds are midpoints between consecutive distinct values. Near-equal
    gains are resolved toward the lowest feature index, then the lowest
    threshold.
    """
    n = X.shape[0]
    if n < 2 * min_samples_leaf or len(features) == 0:
        return None
    features = np.sort(np.asarray(features, dtype=np.int64))
    sub = X[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    gs = g[order]
    hs = h[order]

    G, H = g.sum(), h.sum()
    GL = np.cumsum(gs, axis=0)[:-1]
    HL = np.cumsum(hs, axis=0)[:-1]
    GR, HR = G - GL, H - HL

    with np.errstate(divide="ignore", invalid="ignore"):
        gain = GL**2 / (HL + lam) + GR**2 / (HR + lam) - G**2 / (H + lam)
    n_left = np.arange(1, n)[:, None]
    valid = (xs[1:] != xs[:-1]) & (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
    valid &= np.isfinite(gain)
    if not valid.any():
        return None

    # feature-major so the first maximum is the lowest feature, then lowest threshold
    gain_fm = np.where(valid, gain, -np.inf).T
    best = gain_fm.max()
    if best <= 0:
        return None
    f_pos, i = np.unravel_index(np.argmax(gain_fm >= best - _TIE_RTOL * abs(best)), gain_fm.shape)
    threshold = 0.5 * (xs[i, f_pos] + xs[i + 1, f_pos])
    return float(gain_fm[f_pos, i]), int(features[f_pos]), float(threshold)


def grow_tree(
    X,
    g,
    h,
    *,
    lam: float = 0.0,
    leaf_sign: float = 1.0,
    max_depth: int | None = None,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    """Grow a tree depth-first; leaves hold ``leaf_sign * G / (H + lam)``.

    When ``max_features`` is smaller than the feature count, each node draws
    that many candidate features from ``rng``.
    """
    X = np.asarray(X, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    n_features = X.shape[1]
    m = n_features if max_features is None else int(max_features)
    if not 1 <= m <= n_features:
        raise ValueError(f"max_features must be in [1, {n_features}], got {m}")
    if m < n_features and rng is None:
        raise ValueError("a random generator is required when max_features < n_features")

    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(idx):
        G, H = g[idx].sum(), h[idx].sum()
        denom = H + lam
        return leaf_sign * G / denom if denom != 0 else 0.0

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        value[node] = leaf_value(idx)
        if max_depth is not None and depth >= max_depth:
            continue
        if m < n_features:
            cand = rng.choice(n_features, size=m, replace=False)
        else:
            cand = np.arange(n_features)
        split = best_split(X[idx], g[idx], h[idx], cand, lam, min_samples_leaf)
        if split is None:
            continue
        _, f, thr = split
        mask = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node] = new_node()
        right[node] = new_node()
        # push right first so the left subtree is numbered first
        stack.append((right[node], idx[~mask], depth + 1))
        stack.append((left[node], idx[mask], depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64),
    )
