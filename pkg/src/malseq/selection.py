"""Stratified k-fold cross-validation and exhaustive grid search with refit."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .classic import GbtModel, KnnModel, LinearSvmModel, RandomForestModel, featurize
from .errors import ClassTooSmall, MalseqError
from .evaluation import DEFAULT_THRESHOLD, basic_metrics, confusion, roc_auc
from .sequences import LabeledDataset

log = logging.getLogger(__name__)

SELECTION_METRICS = ("accuracy", "roc_auc")


class CandidateError(MalseqError):
    def __init__(self, params: dict, cause: Exception):
        super().__init__(f"candidate {format_params(params)} failed: {type(cause).__name__}: {cause}")
        self.params = params
        self.cause = cause


def _make_knn(params, seed):
    return KnnModel(k=params.get("k", 5), metric=params.get("metric", "hamming"))


def _make_svm(params, seed):
    return LinearSvmModel(lam=params.get("lam", 1e-3), epochs=params.get("epochs", 20), seed=seed)


def _make_rf(params, seed):
    return RandomForestModel(
        n_trees=params.get("n_trees", 50),
        max_depth=params.get("max_depth"),
        max_features=params.get("max_features"),
        min_samples_leaf=params.get("min_samples_leaf", 1),
        seed=seed,
    )


def _make_gbt(variant):
    def make(params, seed):
        return GbtModel(
            n_rounds=params.get("n_rounds", 50),
            learning_rate=params.get("learning_rate", 0.1),
            max_depth=params.get("max_depth", 3),
            variant=variant,
            lam=params.get("lam", 1.0),
            min_samples_leaf=params.get("min_samples_leaf", 1),
            subsample=params.get("subsample", 1.0),
            seed=seed,
        )

    return make


# GBC is the plain variant, XGB the second-order regularized one.
ALGORITHMS: dict[str, Callable[[dict, int], Any]] = {
    "knn": _make_knn,
    "svm": _make_svm,
    "rf": _make_rf,
    "gbc": _make_gbt("plain"),
    "xgb": _make_gbt("regularized"),
}


def make_model(algorithm: str, params: dict, seed: int = 0):
    try:
        factory = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {sorted(ALGORITHMS)}") from None
    return factory(params, seed)


def kfold_indices(n: int, k: int, labels, seed: int = 0) -> list[np.ndarray]:
    """Stratified folds: each class is shuffled and dealt round-robin.

    Per-class counts differ by at most one between folds; each fold is
    returned sorted.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(labels) != n:
        raise ValueError("labels must have length n")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if len(members) < k:
            raise ClassTooSmall(f"class {cls} has {len(members)} rows, fewer than {k} folds")
        for j, i in enumerate(rng.permutation(members)):
            folds[(j + offset) % k].append(int(i))
        # keep fold sizes level when classes have uneven remainders
        offset = (offset + len(members)) % k
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def expand_grid(grid: dict[str, list]) -> list[dict]:
    """Cartesian product in lexicographic parameter-name order (last name varies fastest)."""
    names = sorted(grid)
    for name in names:
        if len(grid[name]) == 0:
            raise ValueError(f"grid entry {name!r} has no candidates")
    return [dict(zip(names, values)) for values in itertools.product(*(grid[n] for n in names))]


def format_params(params: dict) -> str:
    return ";".join(f"{k}={params[k]}" for k in sorted(params))


def selection_score(metric: str, labels, scores, threshold: float = DEFAULT_THRESHOLD) -> float:
    if metric == "accuracy":
        return basic_metrics(confusion(labels, scores, threshold))[0]
    if metric == "roc_auc":
        return roc_auc(labels, scores)
    raise ValueError(f"unknown selection metric {metric!r}")


@dataclass
class CvRow:
    candidate: int
    params: dict
    fold_scores: list[float]

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_scores))

    @property
    def std(self) -> float:
        return float(np.std(self.fold_scores))


@dataclass
class CvResult:
    algorithm: str
    metric: str
    rows: list[CvRow] = field(default_factory=list)
    best_index: int = 0
    model: Any = None

    @property
    def best_params(self) -> dict:
        return self.rows[self.best_index].params

    def to_csv(self) -> str:
        lines = ["candidate,params,mean,std"]
        for r in self.rows:
            lines.append(f"{r.candidate},{format_params(r.params)},{r.mean:.6f},{r.std:.6f}")
        return "\n".join(lines) + "\n"


def grid_search(
    algorithm: str,
    grid: dict[str, list],
    train: LabeledDataset | tuple,
    k: int = 5,
    seed: int = 0,
    *,
    metric: str = "accuracy",
    featurization: str = "identity",
    n_codes: int | None = None,
    fixed: dict | None = None,
) -> CvResult:
    """Score every grid candidate by mean k-fold CV metric, then refit the winner on all of ``train``.

    ``train`` is either a :class:`LabeledDataset` (featurized here) or an
    ``(X, y)`` pair of ready features. ``fixed`` parameters apply to every
    candidate. Ties on the mean go to the earliest candidate.
    """
    if metric not in SELECTION_METRICS:
        raise ValueError(f"metric must be one of {SELECTION_METRICS}")
    if isinstance(train, LabeledDataset):
        X = featurize(train.codes, featurization, n_codes)
        y = train.labels
    else:
        X, y = (np.asarray(a) for a in train)
    folds = kfold_indices(len(y), k, y, seed)
    candidates = expand_grid(grid)

    result = CvResult(algorithm, metric)
    for ci, cand in enumerate(candidates):
        params = {**(fixed or {}), **cand}
        scores = []
        for fi, held_out in enumerate(folds):
            mask = np.ones(len(y), dtype=bool)
            mask[held_out] = False
            try:
                model = make_model(algorithm, params, seed).fit(X[mask], y[mask])
                scores.append(selection_score(metric, y[held_out], model.score(X[held_out])))
            except MalseqError as exc:
                raise CandidateError(cand, exc) from exc
            except (ValueError, ArithmeticError) as exc:
                raise CandidateError(cand, exc) from exc
        result.rows.append(CvRow(ci, cand, scores))
        log.debug("%s %s mean %s %.4f", algorithm, format_params(cand), metric, result.rows[-1].mean)

    means = np.array([r.mean for r in result.rows])
    result.best_index = int(np.argmax(means))
    best = {**(fixed or {}), **result.best_params}
    try:
        result.model = make_model(algorithm, best, seed).fit(X, y)
    except (MalseqError, ValueError, ArithmeticError) as exc:
        raise CandidateError(result.best_params, exc) from exc
    return result
