"""Planted-lexicon corpus with a known labelling rule, used for end-to-end checks.

A text is offensive (``HOF``) iff it contains at least one planted word; the
rest of each text is drawn from a disjoint background vocabulary.
"""
from __future__ import annotations

import csv
import string
from pathlib import Path

import numpy as np

from .corpus import SCHEMAS, LabeledCorpus, Sample


def _words(rng: np.random.Generator, n: int, length: int, exclude=frozenset()) -> list[str]:
    letters = np.array(list(string.ascii_lowercase))
    out: list[str] = []
    seen = set(exclude)
    while len(out) < n:
        w = "".join(rng.choice(letters, size=length))
        if w not in seen:
            seen.add(w)
            out.append(w)
    return out


def make_lexicons(seed: int = 0, n_planted: int = 30, n_background: int = 400) -> tuple[list[str], list[str]]:
    rng = np.random.default_rng(seed)
    planted = _words(rng, n_planted, 6)
    background = _words(rng, n_background, 5, exclude=frozenset(planted))
    return planted, background


def oracle_label(tokens, planted) -> str:
    """The generating rule."""
    planted = set(planted)
    return "HOF" if any(t in planted for t in tokens) else "NOT"


def generate(
    n: int,
    seed: int,
    planted: list[str],
    background: list[str],
    min_len: int = 5,
    max_len: int = 20,
    positive_rate: float = 0.5,
    id_prefix: str = "s",
) -> LabeledCorpus:
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(n):
        length = int(rng.integers(min_len, max_len + 1))
        toks = list(rng.choice(background, size=length))
        if rng.random() < positive_rate:
            k = int(rng.integers(1, 3))
            for pos in rng.choice(length, size=k, replace=False):
                toks[pos] = str(rng.choice(planted))
        samples.append(Sample(f"{id_prefix}{i}", " ".join(toks), oracle_label(toks, planted)))
    return LabeledCorpus(SCHEMAS[("HASOC2021", "A")], tuple(samples))


def write_hasoc(corpus: LabeledCorpus, path) -> None:
    """Write in HASOC 2021 CSV layout (task_2 filled from task_1)."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["_id", "text", "task_1", "task_2"])
        for s in corpus:
            w.writerow([s.id, s.raw_text, s.label, "NONE" if s.label == "NOT" else "OFFN"])
