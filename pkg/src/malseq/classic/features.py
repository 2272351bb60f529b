"""Feature views of encoded rows for the order-blind models."""

import numpy as np

from ..sequences import PAD, UNK

MODES = ("identity", "histogram")


def featurize(codes, mode: str = "identity", n_codes: int | None = None) -> np.ndarray:
    """Map an encoded row (or a 2-D batch of rows) to real feature vectors.

    ``identity`` returns the codes as floats. ``histogram`` counts each code
    over ``n_codes`` bins (PAD column left at zero); codes at or beyond
    ``n_codes`` are counted as UNK.
    """
    codes = np.asarray(codes, dtype=np.int64)
    single = codes.ndim == 1
    batch = codes[None, :] if single else codes
    if mode == "identity":
        out = batch.astype(np.float64)
    elif mode == "histogram":
        if n_codes is None:
            n_codes = int(batch.max(initial=UNK)) + 1
        n_codes = max(n_codes, UNK + 1)
        clipped = np.where(batch >= n_codes, UNK, batch)
        offsets = np.arange(batch.shape[0])[:, None] * n_codes
        out = np.bincount((clipped + offsets).ravel(), minlength=batch.shape[0] * n_codes)
        out = out.reshape(batch.shape[0], n_codes).astype(np.float64)
        out[:, PAD] = 0.0
    else:
        raise ValueError(f"unknown featurization {mode!r}; expected one of {MODES}")
    return out[0] if single else out
