"""Turn call sequences into fixed-length integer rows and manage the CSV dataset.

Code 0 is padding and code 1 stands for tokens never seen while the
vocabulary was built; real tokens start at 2.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ClassTooSmall, IoFailure, SchemaMismatch, SingleClass
from .ingest import CallSequence

PAD = 0
UNK = 1
FIRST_CODE = 2
PAD_TOKEN = "<PAD>"
DEFAULT_LENGTH = 100

ID_PATTERN = re.compile(r"^[A-Za-z0-9_.-]+$")


def collapse_consecutive(tokens: Sequence[str]) -> list[str]:
    """Replace each run of identical adjacent tokens by one copy."""
    out: list[str] = []
    for tok in tokens:
        if not out or out[-1] != tok:
            out.append(tok)
    return out


def fit_length(tokens: Sequence[str], length: int) -> list[str]:
    """Truncate to ``length`` tokens or right-pad with :data:`PAD_TOKEN`."""
    if length < 1:
        raise ValueError("length must be >= 1")
    kept = list(tokens[:length])
    return kept + [PAD_TOKEN] * (length - len(kept))


@dataclass
class Vocabulary:
    token_to_code: dict[str, int] = field(default_factory=dict)

    def __len__(self):
        return len(self.token_to_code)

    @property
    def max_code(self) -> int:
        return FIRST_CODE + len(self.token_to_code) - 1 if self.token_to_code else UNK

    @property
    def size(self) -> int:
        """Number of rows an embedding table needs (PAD and UNK included)."""
        return self.max_code + 1

    def code(self, token: str) -> int:
        if token == PAD_TOKEN:
            return PAD
        return self.token_to_code.get(token, UNK)

    def decoder(self) -> dict[int, str]:
        return {c: t for t, c in self.token_to_code.items()}

    def save(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["token", "code"])
            for tok, code in self.token_to_code.items():
                w.writerow([tok, code])

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != ["token", "code"]:
            raise SchemaMismatch(f"{path}: expected header 'token,code'")
        mapping = {tok: int(code) for tok, code in rows[1:]}
        if sorted(mapping.values()) != list(range(FIRST_CODE, FIRST_CODE + len(mapping))):
            raise SchemaMismatch(f"{path}: codes are not contiguous from {FIRST_CODE}")
        return cls(mapping)


def build_vocabulary(sequences: Iterable[CallSequence | Sequence[str]]) -> Vocabulary:
    """Assign codes to tokens in order of first appearance."""
    mapping: dict[str, int] = {}
    for seq in sequences:
        tokens = seq.tokens if isinstance(seq, CallSequence) else seq
        for tok in tokens:
            if tok != PAD_TOKEN and tok not in mapping:
                mapping[tok] = FIRST_CODE + len(mapping)
    return Vocabulary(mapping)


def prepare_tokens(tokens: Sequence[str], length: int) -> list[str]:
    return fit_length(collapse_consecutive(tokens), length)


def encode_sequence(tokens: Sequence[str], vocab: Vocabulary, length: int) -> np.ndarray:
    """Collapse runs, fit to ``length`` and map to codes (unknown -> UNK)."""
    return np.array([vocab.code(t) for t in prepare_tokens(tokens, length)], dtype=np.int64)


@dataclass
class LabeledDataset:
    """Encoded rows, one per source id.

    ``codes`` has shape ``(n, length)``; ``labels`` is 0 for goodware and 1
    for malware.
    """

    ids: list[str]
    codes: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.codes.ndim != 2:
            self.codes = self.codes.reshape(len(self.ids), -1)
        if not (len(self.ids) == self.codes.shape[0] == self.labels.shape[0]):
            raise ValueError("ids, codes and labels must have the same length")

    @property
    def length(self) -> int:
        return self.codes.shape[1]

    def __len__(self):
        return len(self.ids)

    def subset(self, index) -> "LabeledDataset":
        index = np.asarray(index, dtype=np.int64)
        return LabeledDataset([self.ids[i] for i in index], self.codes[index], self.labels[index])

    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))

    def __eq__(self, other):
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.codes.shape == other.codes.shape
            and np.array_equal(self.codes, other.codes)
            and np.array_equal(self.labels, other.labels)
        )


def encode_dataset(sequences: Sequence[CallSequence], vocab: Vocabulary, length: int) -> LabeledDataset:
    if any(s.label is None for s in sequences):
        raise ValueError("every sequence needs a label to be encoded into a dataset")
    codes = np.zeros((len(sequences), length), dtype=np.int64)
    for i, seq in enumerate(sequences):
        codes[i] = encode_sequence(seq.tokens, vocab, length)
    return LabeledDataset([s.source_id for s in sequences], codes, [s.label for s in sequences])


def _header(length: int) -> list[str]:
    return ["id"] + [f"t_{i}" for i in range(length)] + ["label"]


def write_dataset_csv(ds: LabeledDataset, path) -> None:
    if len(set(ds.ids)) != len(ds.ids):
        raise ValueError("dataset ids are not unique")
    for sid in ds.ids:
        if not ID_PATTERN.match(sid):
            raise ValueError(f"id {sid!r} contains characters outside [A-Za-z0-9_.-]")
    if np.any(ds.codes < 0) or not np.all(np.isin(ds.labels, (0, 1))):
        raise ValueError("codes must be non-negative and labels in {0,1}")
    lines = [",".join(_header(ds.length))]
    for sid, row, label in zip(ds.ids, ds.codes.tolist(), ds.labels.tolist()):
        lines.append(",".join([sid, *map(str, row), str(label)]))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def read_dataset_csv(path) -> LabeledDataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise SchemaMismatch(f"{path}: empty file")
    header = lines[0].split(",")
    length = len(header) - 2
    if length < 1 or header != _header(length):
        raise SchemaMismatch(f"{path}: header must be id,t_0,...,t_<L-1>,label")

    ids, rows, labels = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != length + 2:
            raise SchemaMismatch(f"{path}: line {lineno} has {len(cells)} columns, expected {length + 2}")
        sid = cells[0]
        if not ID_PATTERN.match(sid):
            raise ValueError(f"{path}: line {lineno}: invalid id {sid!r}")
        try:
            row = [int(c) for c in cells[1:-1]]
        except ValueError:
            raise ValueError(f"{path}: line {lineno} ({sid}): non-integer code") from None
        if min(row) < 0:
            raise ValueError(f"{path}: line {lineno} ({sid}): negative code")
        if cells[-1] not in ("0", "1"):
            raise ValueError(f"{path}: line {lineno} ({sid}): label {cells[-1]!r} not in {{0,1}}")
        ids.append(sid)
        rows.append(row)
        labels.append(int(cells[-1]))
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate ids")
    codes = np.array(rows, dtype=np.int64).reshape(len(ids), length)
    return LabeledDataset(ids, codes, np.array(labels, dtype=np.int64))


def read_public_dataset(path, code_offset: int = FIRST_CODE) -> LabeledDataset:
    """Load the public 100-call dataset (``hash,t_0..t_99,malware``).

    Its API codes start at 0, so they are shifted by ``code_offset`` to keep
    PAD and UNK reserved.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "hash" or header[-1] != "malware":
            raise SchemaMismatch(f"{path}: expected hash,t_0,...,malware header")
        ids, rows, labels = [], [], []
        for cells in reader:
            if not cells:
                continue
            ids.append(_sanitize_id(cells[0], len(ids)))
            rows.append([int(c) + code_offset for c in cells[1:-1]])
            labels.append(int(cells[-1]))
    return LabeledDataset(ids, np.array(rows, dtype=np.int64), np.array(labels, dtype=np.int64))


def _sanitize_id(raw: str, index: int) -> str:
    sid = re.sub(r"[^A-Za-z0-9_.-]", "_", raw)
    return sid or f"row{index}"


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_indices(labels, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Stratified train/test row indices, each returned in ascending order."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in (0, 1):
        members = np.flatnonzero(labels == cls)
        if len(members) < 2:
            raise ClassTooSmall(f"class {cls} has {len(members)} rows; need at least 2 to split")
        n_train = min(max(_round_half_up(train_fraction * len(members)), 1), len(members) - 1)
        shuffled = rng.permutation(members)
        train.append(shuffled[:n_train])
        test.append(shuffled[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(ds: LabeledDataset, spec: SplitSpec = SplitSpec()) -> tuple[LabeledDataset, LabeledDataset]:
    train_idx, test_idx = split_indices(ds.labels, spec.train_fraction, spec.seed)
    return ds.subset(train_idx), ds.subset(test_idx)


def oversample_minority(train: LabeledDataset, seed: int) -> LabeledDataset:
    """Duplicate random minority rows (with replacement) until both classes match.

    Copies are appended after the original rows with ``__os<n>`` id suffixes.
    """
    n0, n1 = train.class_counts()
    if n0 == 0 or n1 == 0:
        raise SingleClass("oversampling needs both classes present")
    if n0 == n1:
        return train
    minority = 0 if n0 < n1 else 1
    members = np.flatnonzero(train.labels == minority)
    rng = np.random.default_rng(seed)
    picks = rng.choice(members, size=abs(n1 - n0), replace=True)

    taken = set(train.ids)
    new_ids = []
    for j, i in enumerate(picks):
        sid = f"{train.ids[i]}__os{j}"
        while sid in taken:
            sid += "_"
        taken.add(sid)
        new_ids.append(sid)
    return LabeledDataset(
        train.ids + new_ids,
        np.concatenate([train.codes, train.codes[picks]]),
        np.concatenate([train.labels, train.labels[picks]]),
    )


def class_alphabets(overlap: float, union_size: int = 64) -> tuple[list[str], list[str]]:
    """Two token alphabets whose Jaccard overlap is as close to ``overlap`` as the size allows."""
    if not 0.0 <= overlap <= 1.0:
        raise ValueError("overlap must lie in [0, 1]")
    shared = _round_half_up(overlap * union_size)
    excl0 = (union_size - shared) // 2
    excl1 = union_size - shared - excl0
    names = [f"Api{k:03d}" for k in range(union_size)]
    common = names[:shared]
    only0 = names[shared:shared + excl0]
    only1 = names[shared + excl0:]
    return common + only0, common + only1


def generate_synthetic_sequences(
    n_per_class: int,
    length: int = DEFAULT_LENGTH,
    overlap: float = 0.0,
    seed: int = 0,
    union_size: int = 64,
    follow_prob: float = 0.6,
    n_successors: int = 3,
) -> list[CallSequence]:
    """Draw labeled token sequences from two class-specific Markov chains.

    Each class walks over its own alphabet; every token has a handful of
    preferred successors (different per class), taken with probability
    ``follow_prob``. Adjacent tokens never repeat. Class 0 rows come first.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    alphabets = class_alphabets(overlap, union_size)
    out: list[CallSequence] = []
    for cls, alphabet in enumerate(alphabets):
        size = len(alphabet)
        succ = []
        for a in range(size):
            others = np.array([b for b in range(size) if b != a])
            succ.append(rng.choice(others, size=min(n_successors, len(others)), replace=False))
        for i in range(n_per_class):
            walk = [int(rng.integers(size))]
            for _ in range(length - 1):
                prev = walk[-1]
                if size == 1:
                    break
                if rng.random() < follow_prob:
                    nxt = int(rng.choice(succ[prev]))
                else:
                    nxt = int(rng.integers(size - 1))
                    nxt += nxt >= prev
                walk.append(nxt)
            out.append(CallSequence(f"syn{cls}_{i:05d}", [alphabet[k] for k in walk], cls))
    return out


def generate_synthetic(
    n_per_class: int,
    length: int = DEFAULT_LENGTH,
    overlap: float = 0.0,
    seed: int = 0,
    **kwargs,
) -> LabeledDataset:
    """Synthetic encoded dataset; codes follow first appearance, class 0 rows first."""
    seqs = generate_synthetic_sequences(n_per_class, length, overlap, seed, **kwargs)
    vocab = build_vocabulary(seqs)
    return encode_dataset(seqs, vocab, length)
