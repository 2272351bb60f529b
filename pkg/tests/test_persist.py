import json

import numpy as np
import pytest

from malseq.classic import GbtModel, KnnModel, LinearSvmModel, RandomForestModel
from malseq.errors import SchemaMismatch
from malseq.neural import CnnModel, RnnModel, TrainConfig, train_neural
from malseq.persist import load_model, model_from_document, model_to_document, save_model


def _data(seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], 20)
    X = np.where(y[:, None] == 1, rng.integers(4, 9, (40, 6)), rng.integers(1, 6, (40, 6)))
    return X, y


def _classic():
    X, y = _data()
    return [
        (KnnModel(k=3).fit(X, y), X),
        (LinearSvmModel(lam=1e-2, epochs=5, seed=1).fit(X, y), X),
        (RandomForestModel(n_trees=5, max_depth=3, seed=2).fit(X, y), X),
        (GbtModel(n_rounds=5, variant="plain").fit(X, y), X),
        (GbtModel(n_rounds=5, variant="regularized", lam=0.5).fit(X, y), X),
    ]


def _neural():
    X, y = _data()
    out = []
    for m in (CnnModel(10, d_emb=3, n_filters=2, width=2, seed=0), RnnModel(10, d_emb=3, d_hidden=2, seed=0)):
        train_neural(m, X, y, TrainConfig(epochs=2, batch_size=8))
        out.append((m, X))
    return out


@pytest.mark.parametrize("model,X", _classic() + _neural())
def test_round_trip_scores_exactly(tmp_path, model, X):
    path = tmp_path / "m.json"
    save_model(model, path)
    again = load_model(path)
    assert type(again) is type(model)
    assert np.array_equal(again.score(X), model.score(X))
    doc = json.loads(path.read_text())
    assert doc["format"] == "malseq-model" and doc["version"] == 1
    assert {"hyperparameters", "parameters", "kind"} <= set(doc)


def test_rejects_foreign_documents():
    doc = model_to_document(KnnModel(k=1).fit(*_data()))
    with pytest.raises(SchemaMismatch):
        model_from_document({**doc, "format": "other"})
    with pytest.raises(SchemaMismatch):
        model_from_document({**doc, "version": 99})
    with pytest.raises(SchemaMismatch):
        model_from_document({**doc, "kind": "nope"})
