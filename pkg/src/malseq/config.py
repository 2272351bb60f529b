"""Flat ``key = value`` pipeline configuration with dotted keys.

Example::

    seed = 7
    methods = knn,rf,rnn
    knn.grid.k = 1,3,5,7
    rnn.epochs = 20

``<alg>.grid.<param>`` lists are searched; ``<alg>.<param>`` values are held
fixed for every candidate. Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .neural import TrainConfig

CLASSIC = ("svm", "knn", "xgb", "rf", "gbc")
NEURAL = ("cnn", "rnn")
# fixed report row order
ALL_METHODS = ("cnn", "rnn", "svm", "knn", "xgb", "rf", "gbc")
DISPLAY_NAMES = {m: m.upper() for m in ALL_METHODS}

MODEL_PARAMS = {
    "knn": {"k", "metric"},
    "svm": {"lam", "epochs"},
    "rf": {"n_trees", "max_depth", "max_features", "min_samples_leaf"},
    "gbc": {"n_rounds", "learning_rate", "max_depth", "min_samples_leaf", "subsample"},
    "xgb": {"n_rounds", "learning_rate", "max_depth", "lam", "min_samples_leaf", "subsample"},
    "cnn": {"epochs", "batch_size", "lr", "d_emb", "n_filters", "width", "init_scale"},
    "rnn": {"epochs", "batch_size", "lr", "d_emb", "d_hidden", "init_scale"},
}

DEFAULTS: dict[str, object] = {
    "seed": 0,
    "length": 100,
    "train_fraction": 0.8,
    "featurization": "identity",
    "oversample": True,
    "threshold": 0.5,
    "methods": list(ALL_METHODS),
    "cv.folds": 5,
    "cv.metric": "accuracy",
    "neural.max_rows": 20000,
    "knn.metric": "hamming",
    "knn.grid.k": [1, 3, 5, 7],
    "svm.epochs": 20,
    "svm.grid.lam": [1e-4, 1e-3, 1e-2],
    "rf.grid.n_trees": [50],
    "rf.grid.max_depth": [None, 12],
    "gbc.grid.n_rounds": [50],
    "gbc.grid.learning_rate": [0.1, 0.3],
    "gbc.grid.max_depth": [3],
    "xgb.lam": 1.0,
    "xgb.grid.n_rounds": [50],
    "xgb.grid.learning_rate": [0.1, 0.3],
    "xgb.grid.max_depth": [3],
    "cnn.epochs": 10,
    "cnn.batch_size": 32,
    "cnn.lr": 1e-3,
    "cnn.d_emb": 16,
    "cnn.n_filters": 32,
    "cnn.width": 5,
    "rnn.epochs": 10,
    "rnn.batch_size": 32,
    "rnn.lr": 1e-3,
    "rnn.d_emb": 16,
    "rnn.d_hidden": 32,
}

_TYPES = {
    "seed": int,
    "length": int,
    "train_fraction": float,
    "featurization": str,
    "oversample": bool,
    "threshold": float,
    "cv.folds": int,
    "cv.metric": str,
    "neural.max_rows": int,
}


def parse_scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("none", "null", ""):
        return None
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(t)
        except ValueError:
            pass
    return t


def _coerce(key: str, raw: str):
    if key == "methods":
        methods = [m.strip().lower() for m in raw.split(",") if m.strip()]
        bad = [m for m in methods if m not in ALL_METHODS]
        if bad or not methods:
            raise ConfigError(f"methods: unknown or empty {bad or raw!r}; choose from {','.join(ALL_METHODS)}")
        return methods
    if ".grid." in key:
        return [parse_scalar(v) for v in raw.split(",")]
    value = parse_scalar(raw)
    kind = _TYPES.get(key)
    if kind is bool and not isinstance(value, bool):
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise ConfigError(f"{key}: expected an integer, got {raw!r}")
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {raw!r}")
        value = float(value)
    if kind is str and not isinstance(value, str):
        raise ConfigError(f"{key}: expected text, got {raw!r}")
    return value


def _check_key(key: str) -> None:
    if key in DEFAULTS or key in _TYPES or key == "methods":
        return
    parts = key.split(".")
    if len(parts) == 3 and parts[1] == "grid" and parts[0] in CLASSIC and parts[2] in MODEL_PARAMS[parts[0]]:
        return
    if len(parts) == 2 and parts[0] in MODEL_PARAMS and parts[1] in MODEL_PARAMS[parts[0]]:
        return
    raise ConfigError(f"unknown configuration key {key!r}")


@dataclass
class PipelineConfig:
    values: dict = field(default_factory=lambda: {k: (list(v) if isinstance(v, list) else v) for k, v in DEFAULTS.items()})

    def __getitem__(self, key):
        return self.values[key]

    def set(self, key: str, raw: str) -> None:
        key = key.strip()
        _check_key(key)
        value = _coerce(key, raw)
        if ".grid." in key:
            alg = key.split(".")[0]
            # a grid entry replaces any fixed value of the same parameter and vice versa
            self.values.pop(f"{alg}.{key.split('.')[2]}", None)
        elif key.count(".") == 1 and key.split(".")[0] in CLASSIC:
            self.values.pop(f"{key.split('.')[0]}.grid.{key.split('.')[1]}", None)
        self.values[key] = value
        self.validate()

    def update_text(self, text: str, source: str = "<config>") -> None:
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
            key, raw = line.split("=", 1)
            try:
                self.set(key, raw)
            except ConfigError as exc:
                raise ConfigError(f"{source}:{lineno}: {exc}") from None

    @classmethod
    def load(cls, path=None, overrides: list[str] | tuple = ()) -> "PipelineConfig":
        cfg = cls()
        if path is not None:
            try:
                text = Path(path).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            cfg.update_text(text, str(path))
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            key, raw = item.split("=", 1)
            cfg.set(key, raw)
        return cfg

    def validate(self) -> None:
        v = self.values
        if v["length"] < 1:
            raise ConfigError("length must be >= 1")
        if not 0.0 < v["train_fraction"] < 1.0:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if v["featurization"] not in ("identity", "histogram"):
            raise ConfigError("featurization must be identity or histogram")
        if v["cv.metric"] not in ("accuracy", "roc_auc"):
            raise ConfigError("cv.metric must be accuracy or roc_auc")
        if v["cv.folds"] < 2:
            raise ConfigError("cv.folds must be >= 2")

    def grid(self, alg: str) -> dict[str, list]:
        prefix = f"{alg}.grid."
        return {k[len(prefix):]: list(v) for k, v in self.values.items() if k.startswith(prefix)}

    def fixed(self, alg: str) -> dict:
        out = {}
        for k, v in self.values.items():
            parts = k.split(".")
            if len(parts) == 2 and parts[0] == alg:
                out[parts[1]] = v
        return out

    def train_config(self, alg: str) -> TrainConfig:
        p = self.fixed(alg)
        return TrainConfig(
            epochs=int(p.get("epochs", 10)),
            batch_size=int(p.get("batch_size", 32)),
            seed=int(self["seed"]),
            lr=float(p.get("lr", 1e-3)),
        )

    def architecture(self, alg: str) -> dict:
        p = self.fixed(alg)
        keys = {"cnn": ("d_emb", "n_filters", "width", "init_scale"), "rnn": ("d_emb", "d_hidden", "init_scale")}[alg]
        return {k: p[k] for k in keys if k in p}

    def snapshot(self) -> dict:
        return {k: self.values[k] for k in sorted(self.values)}

    def to_text(self) -> str:
        def fmt(v):
            if isinstance(v, list):
                return ",".join(fmt(x) for x in v)
            if v is None:
                return "none"
            if isinstance(v, bool):
                return "true" if v else "false"
            return str(v)

        return "".join(f"{k} = {fmt(v)}\n" for k, v in self.snapshot().items())

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.snapshot(), sort_keys=True).encode()).hexdigest()
