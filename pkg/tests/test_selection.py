import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malseq.classic import KnnModel
from malseq.errors import ClassTooSmall
from malseq.evaluation import basic_metrics, confusion
from malseq.selection import CandidateError, expand_grid, format_params, grid_search, kfold_indices


def test_kfold_example():
    labels = np.array([0] * 6 + [1] * 4)
    folds = kfold_indices(10, 2, labels, seed=0)
    assert sorted(np.concatenate(folds).tolist()) == list(range(10))
    for f in folds:
        assert len(f) == 5
        assert np.sum(labels[f] == 1) == 2


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 5), st.integers(5, 30), st.integers(5, 30), st.integers(0, 1000))
def test_kfold_partition_and_balance(k, n0, n1, seed):
    labels = np.array([0] * n0 + [1] * n1)
    rng = np.random.default_rng(seed)
    rng.shuffle(labels)
    folds = kfold_indices(len(labels), k, labels, seed)
    assert len(folds) == k
    joined = np.concatenate(folds)
    assert sorted(joined.tolist()) == list(range(len(labels)))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    for cls in (0, 1):
        per = [int(np.sum(labels[f] == cls)) for f in folds]
        assert max(per) - min(per) <= 1


def test_kfold_deterministic_and_too_small():
    labels = [0, 1] * 10
    a = kfold_indices(20, 4, labels, seed=3)
    b = kfold_indices(20, 4, labels, seed=3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    with pytest.raises(ClassTooSmall):
        kfold_indices(6, 3, [0, 0, 0, 0, 0, 1], 0)


def test_expand_grid_order():
    cands = expand_grid({"max_depth": [3, 5], "lr": [0.1, 0.2, 0.3]})
    assert len(cands) == 6
    assert cands[0] == {"lr": 0.1, "max_depth": 3}
    assert cands[1] == {"lr": 0.1, "max_depth": 5}
    assert cands[-1] == {"lr": 0.3, "max_depth": 5}
    assert format_params(cands[1]) == "lr=0.1;max_depth=5"


def _noisy(n=60, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = np.where(y[:, None] == 1, rng.integers(5, 9, (n, 8)), rng.integers(2, 6, (n, 8)))
    flip = rng.choice(n, n // 10, replace=False)
    y = y.copy()
    y[flip] = 1 - y[flip]
    return X, y


def test_single_candidate_refits_on_everything():
    X, y = _noisy()
    res = grid_search("knn", {"k": [3]}, (X, y), k=3)
    assert len(res.rows) == 1 and res.best_index == 0
    assert np.array_equal(res.model.score(X), KnnModel(k=3).fit(X, y).score(X))


def test_grid_matches_manual_cv():
    X, y = _noisy()
    res = grid_search("knn", {"k": [1, 25]}, (X, y), k=5, seed=4)
    folds = kfold_indices(len(y), 5, y, 4)
    for row, k in zip(res.rows, (1, 25)):
        manual = []
        for f in folds:
            mask = np.ones(len(y), bool)
            mask[f] = False
            s = KnnModel(k=k).fit(X[mask], y[mask]).score(X[f])
            manual.append(basic_metrics(confusion(y[f], s))[0])
        assert row.fold_scores == pytest.approx(manual, abs=1e-15)
    means = [r.mean for r in res.rows]
    assert res.best_index == int(np.argmax(means))
    assert res.best_params == {"k": [1, 25][res.best_index]}
    assert res.to_csv().splitlines()[0] == "candidate,params,mean,std"


def test_candidate_error_names_params():
    X, y = _noisy()
    with pytest.raises(CandidateError, match="k=2"):
        grid_search("knn", {"k": [2]}, (X, y), k=3)


def test_fixed_parameters_reach_model():
    X, y = _noisy()
    res = grid_search("svm", {"lam": [1e-2]}, (X, y), k=3, fixed={"epochs": 3})
    assert res.model.epochs == 3
