"""Embedding + 1-D convolution and embedding + Elman recurrence, with hand-written backprop.

Both models emit a single logit per sequence. Row 0 of the embedding table
(padding) is zero at initialisation and its gradient is always zeroed, so it
never moves.
"""

from __future__ import annotations

import numpy as np

from .._math import sigmoid
from ..errors import CodeOutOfRange
from ..sequences import PAD


def bce_from_logits(logits, labels) -> float:
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


class SequenceModel:
    kind = "sequence"

    def __init__(self, vocab_size: int, d_emb: int = 16, seed: int = 0, init_scale: float = 0.05):
        self.vocab_size = int(vocab_size)
        self.d_emb = int(d_emb)
        self.seed = int(seed)
        self.init_scale = float(init_scale)
        self.params: dict[str, np.ndarray] = {}

    def _shapes(self) -> dict[str, tuple]:
        raise NotImplementedError

    def init_params(self):
        rng = np.random.default_rng(self.seed)
        a = self.init_scale
        self.params = {name: rng.uniform(-a, a, size=shape) for name, shape in self._shapes().items()}
        self.params["E"][PAD] = 0.0
        return self

    def _check_codes(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        if codes.ndim == 1:
            codes = codes[None, :]
        if codes.size and (codes.min() < 0 or codes.max() >= self.vocab_size):
            raise CodeOutOfRange(
                f"codes must lie in [0, {self.vocab_size - 1}], got [{codes.min()}, {codes.max()}]"
            )
        return codes

    def logits(self, codes):
        raise NotImplementedError

    def backward(self, cache, dlogits) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def forward(self, codes):
        """Probabilities for a batch of code rows plus the activations backward() needs."""
        z, cache = self.logits(codes)
        return sigmoid(z), cache

    def loss_and_grad(self, codes, labels):
        """Mean binary cross-entropy over the batch and its gradient for every parameter."""
        z, cache = self.logits(codes)
        y = np.asarray(labels, dtype=np.float64)
        dz = (sigmoid(z) - y) / len(y)
        grads = self.backward(cache, dz)
        grads["E"][PAD] = 0.0
        return bce_from_logits(z, y), grads

    def loss(self, codes, labels) -> float:
        z, _ = self.logits(codes)
        return bce_from_logits(z, labels)

    def score(self, codes, batch: int = 512) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        single = codes.ndim == 1
        codes = codes[None, :] if single else codes
        out = np.concatenate([self.forward(codes[s:s + batch])[0] for s in range(0, len(codes), batch)])
        return out[0] if single else out

    def hyperparameters(self) -> dict:
        return {"vocab_size": self.vocab_size, "d_emb": self.d_emb, "seed": self.seed, "init_scale": self.init_scale}

    def to_dict(self):
        return {
            "hyperparameters": self.hyperparameters(),
            "parameters": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in self.params.items()},
        }

    @classmethod
    def from_dict(cls, d):
        m = cls(**d["hyperparameters"])
        m.params = {
            k: np.asarray(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in d["parameters"].items()
        }
        return m


class CnnModel(SequenceModel):
    """Embedding -> valid 1-D convolution + ReLU -> global max over time -> dense -> sigmoid."""

    kind = "cnn"

    def __init__(self, vocab_size, d_emb=16, n_filters=32, width=5, seed=0, init_scale=0.05):
        self.n_filters = int(n_filters)
        self.width = int(width)
        super().__init__(vocab_size, d_emb, seed, init_scale)
        self.init_params()

    def _shapes(self):
        return {
            "E": (self.vocab_size, self.d_emb),
            "W": (self.width, self.d_emb, self.n_filters),
            "b_conv": (self.n_filters,),
            "v": (self.n_filters,),
            "c": (1,),
        }

    def hyperparameters(self):
        return {**super().hyperparameters(), "n_filters": self.n_filters, "width": self.width}

    def logits(self, codes):
        codes = self._check_codes(codes)
        p = self.params
        B, L = codes.shape
        if L < self.width:
            raise ValueError(f"sequence length {L} is shorter than the filter width {self.width}")
        X = p["E"][codes]  # (B, L, d)
        # (B, T, d, w) -> (B, T, w, d) -> (B, T, w*d)
        patches = np.lib.stride_tricks.sliding_window_view(X, self.width, axis=1)
        patches = patches.transpose(0, 1, 3, 2).reshape(B, L - self.width + 1, -1)
        Wm = p["W"].reshape(-1, self.n_filters)
        pre = patches @ Wm + p["b_conv"]
        act = np.maximum(pre, 0.0)
        arg = act.argmax(axis=1)  # (B, F)
        pooled = np.take_along_axis(act, arg[:, None, :], axis=1)[:, 0, :]
        z = pooled @ p["v"] + p["c"][0]
        return z, (codes, patches, pre, arg, pooled)

    def backward(self, cache, dz):
        codes, patches, pre, arg, pooled = cache
        p = self.params
        B, T, _ = patches.shape
        g = {}
        g["v"] = pooled.T @ dz
        g["c"] = np.array([dz.sum()])
        dpooled = dz[:, None] * p["v"][None, :]
        dpre = np.zeros_like(pre)
        np.put_along_axis(dpre, arg[:, None, :], dpooled[:, None, :], axis=1)
        dpre *= pre > 0
        g["b_conv"] = dpre.sum(axis=(0, 1))
        g["W"] = (patches.reshape(B * T, -1).T @ dpre.reshape(B * T, -1)).reshape(p["W"].shape)
        dpatch = (dpre @ p["W"].reshape(-1, self.n_filters).T).reshape(B, T, self.width, self.d_emb)
        dX = np.zeros((B, codes.shape[1], self.d_emb))
        for k in range(self.width):
            dX[:, k:k + T, :] += dpatch[:, :, k, :]
        g["E"] = np.zeros_like(p["E"])
        np.add.at(g["E"], codes.ravel(), dX.reshape(-1, self.d_emb))
        return g


class RnnModel(SequenceModel):
    """Embedding -> Elman tanh recurrence from a zero state -> readout of the last hidden state."""

    kind = "rnn"

    def __init__(self, vocab_size, d_emb=16, d_hidden=32, seed=0, init_scale=0.05):
        self.d_hidden = int(d_hidden)
        super().__init__(vocab_size, d_emb, seed, init_scale)
        self.init_params()

    def _shapes(self):
        return {
            "E": (self.vocab_size, self.d_emb),
            "W_xh": (self.d_emb, self.d_hidden),
            "W_hh": (self.d_hidden, self.d_hidden),
            "b_h": (self.d_hidden,),
            "w_out": (self.d_hidden,),
            "b_out": (1,),
        }

    def hyperparameters(self):
        return {**super().hyperparameters(), "d_hidden": self.d_hidden}

    def hidden_states(self, codes) -> np.ndarray:
        """Hidden states h_0..h_L, shape (B, L+1, d_hidden); h_0 is zero."""
        codes = self._check_codes(codes)
        p = self.params
        B, L = codes.shape
        X = p["E"][codes]
        # input projections do not depend on the recurrence
        U = X @ p["W_xh"] + p["b_h"]
        H = np.zeros((B, L + 1, self.d_hidden))
        for t in range(L):
            H[:, t + 1] = np.tanh(U[:, t] + H[:, t] @ p["W_hh"])
        return H

    def logits(self, codes):
        codes = self._check_codes(codes)
        H = self.hidden_states(codes)
        z = H[:, -1] @ self.params["w_out"] + self.params["b_out"][0]
        return z, (codes, H)

    def backward(self, cache, dz):
        codes, H = cache
        p = self.params
        B, L = codes.shape
        X = p["E"][codes]
        g = {
            "w_out": H[:, -1].T @ dz,
            "b_out": np.array([dz.sum()]),
            "W_xh": np.zeros_like(p["W_xh"]),
            "W_hh": np.zeros_like(p["W_hh"]),
            "b_h": np.zeros_like(p["b_h"]),
        }
        dU = np.empty((B, L, self.d_hidden))
        dh = dz[:, None] * p["w_out"][None, :]
        for t in range(L - 1, -1, -1):
            da = dh * (1.0 - H[:, t + 1] ** 2)
            dU[:, t] = da
            g["W_hh"] += H[:, t].T @ da
            dh = da @ p["W_hh"].T
        flat_dU = dU.reshape(B * L, -1)
        g["W_xh"] = X.reshape(B * L, -1).T @ flat_dU
        g["b_h"] = flat_dU.sum(axis=0)
        g["E"] = np.zeros_like(p["E"])
        np.add.at(g["E"], codes.ravel(), flat_dU @ p["W_xh"].T)
        return g


def forward(model: SequenceModel, codes):
    return model.forward(codes)


def loss_and_grad(model: SequenceModel, codes, labels):
    return model.loss_and_grad(codes, labels)
