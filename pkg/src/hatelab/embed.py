"""Vocabulary construction and GloVe-format embedding tables."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, EncodingError, ParseError

PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1
EMBED_DIM = 100
MAX_LEN = 64
OOV_RANGE = 0.25


class Vocab:
    def __init__(self, itos: Sequence[str]):
        if list(itos[:2]) != [PAD, UNK]:
            raise ValueError("vocab must start with PAD, UNK")
        self.itos = list(itos)
        self.stoi = {tok: i for i, tok in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("duplicate tokens in vocab")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    def lookup(self, token: str) -> int:
        return self.stoi.get(token, UNK_ID)

    def encode(self, tokens: Sequence[str], max_len: int = MAX_LEN) -> tuple[np.ndarray, int]:
        """Right-padded id array of length ``max_len`` and the unpadded length."""
        ids = np.full(max_len, PAD_ID, dtype=np.int64)
        toks = list(tokens)[:max_len]
        ids[: len(toks)] = [self.lookup(t) for t in toks]
        return ids, len(toks)

    def encode_batch(self, token_lists: Iterable[Sequence[str]], max_len: int = MAX_LEN) -> tuple[np.ndarray, np.ndarray]:
        rows, lens = [], []
        for toks in token_lists:
            ids, n = self.encode(toks, max_len)
            rows.append(ids)
            lens.append(n)
        if not rows:
            return np.zeros((0, max_len), dtype=np.int64), np.zeros(0, dtype=np.int64)
        return np.stack(rows), np.array(lens, dtype=np.int64)

    def decode(self, ids: Iterable[int]) -> list[str]:
        out = []
        for i in ids:
            if not 0 <= i < len(self.itos):
                raise EncodingError(f"id {i} outside vocab of size {len(self)}")
            out.append(self.itos[i])
        return out


def build_vocab(texts, min_freq: int = 1) -> Vocab:
    """Vocabulary over training text, ordered by frequency then lexicographically.

    ``texts`` may be a :class:`~hatelab.corpus.LabeledCorpus` (its clean
    text is used) or any iterable of token lists.
    """
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts: Counter[str] = Counter()
    for item in texts:
        toks = item.tokens if hasattr(item, "tokens") else item
        counts.update(toks)
    kept = sorted((t for t, c in counts.items() if c >= min_freq and t not in (PAD, UNK)), key=lambda t: (-counts[t], t))
    return Vocab([PAD, UNK, *kept])


@dataclass
class EmbeddingTable:
    matrix: np.ndarray
    found: int = 0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2:
            raise ConfigError("embedding matrix must be 2-D")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]


def random_table(vocab: Vocab, seed: int, dim: int = EMBED_DIM) -> EmbeddingTable:
    """Rows drawn from U(-0.25, 0.25); PAD fixed at zero."""
    rng = np.random.default_rng(seed)
    mat = rng.uniform(-OOV_RANGE, OOV_RANGE, size=(len(vocab), dim))
    mat[PAD_ID] = 0.0
    return EmbeddingTable(mat)


def load_embeddings(path, vocab: Vocab, seed: int = 0, dim: int = EMBED_DIM) -> EmbeddingTable:
    """Load GloVe text vectors for ``vocab``; other rows keep their random init."""
    table = random_table(vocab, seed, dim)
    found = 0
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").rstrip(" ").split(" ")
            if len(parts) == 1 and not parts[0]:
                continue
            width = len(parts) - 1
            if width != dim:
                if lineno == 1:
                    raise ConfigError(f"embedding dimension {width} != expected {dim}")
                raise ParseError(f"line {lineno}: expected {dim} values, found {width}")
            idx = vocab.stoi.get(parts[0])
            if idx is None or idx == PAD_ID:
                continue
            try:
                table.matrix[idx] = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric vector value") from None
            found += 1
    table.found = found
    return table
