"""Boundary-token deletion and merging of augmented samples into a corpus.

Two sources of augmented text are supported:

* ``deleted``: the first and last tokens are dropped, unless either of them is
  in the offensive lexicon, in which case the sample is left as it is (and
  later disappears as a duplicate of its original);
* ``generated``: an externally produced continuation is appended to the
  cleaned original text.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import textprep
from .corpus import LabeledCorpus, Sample, TaskSchema
from .errors import DataError

ORIGINAL, DELETED, GENERATED = "original", "deleted", "generated"


@dataclass(frozen=True)
class OffensiveLexicon:
    words: frozenset[str]
    removed_words: frozenset[str] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.words


def _read_terms(path) -> list[str]:
    with Path(path).open("r", encoding="utf-8") as fh:
        return [ln.strip().lower() for ln in fh if ln.strip()]


def load_wordlist(path, removals=None) -> OffensiveLexicon:
    terms = _read_terms(path)
    if not terms:
        raise DataError(f"{path}: empty word list")
    removed = set(_read_terms(removals)) if removals else set()
    words = set(terms)
    return OffensiveLexicon(frozenset(words - removed), frozenset(words & removed))


def delete_boundary_tokens(sample: Sample, lexicon: OffensiveLexicon) -> Sample:
    toks = sample.tokens
    if not toks or toks[0] in lexicon or toks[-1] in lexicon:
        return sample
    return Sample(f"{sample.id}#del", " ".join(toks[1:-1]), sample.label)


def generated_sample(sample: Sample, continuation: str) -> Sample:
    text = f"{sample.clean_text} {textprep.clean(continuation)}".strip()
    return Sample(f"{sample.id}#gen", text, sample.label)


def read_continuations(path) -> dict[str, str]:
    """Tab-separated ``id<TAB>generated text`` lines."""
    out: dict[str, str] = {}
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            sid, sep, text = line.partition("\t")
            if not sep:
                raise DataError(f"{path}:{lineno}: expected 'id<TAB>text'")
            out[sid] = text
    return out


@dataclass(frozen=True)
class AugmentedCorpus:
    schema: TaskSchema
    samples: tuple[Sample, ...]
    provenance: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.samples)

    def as_corpus(self) -> LabeledCorpus:
        return LabeledCorpus(self.schema, self.samples)


def merge_augmented(original: LabeledCorpus, augmented: Iterable[Sample], provenance: str | Sequence[str] = DELETED) -> AugmentedCorpus:
    """Union keyed on clean text; originals win collisions and empty texts are dropped."""
    augmented = list(augmented)
    if isinstance(provenance, str):
        provenance = [provenance] * len(augmented)
    labels = set(original.schema.label_set)
    seen: set[str] = set()
    samples: list[Sample] = []
    prov: list[str] = []
    ids: set[str] = set()
    for s in original:
        if s.clean_text in seen:
            continue
        seen.add(s.clean_text)
        ids.add(s.id)
        samples.append(s)
        prov.append(ORIGINAL)
    for s, p in zip(augmented, provenance):
        if s.label not in labels:
            raise DataError(f"augmented sample {s.id}: label {s.label!r} not in {original.schema.name} schema")
        if not s.clean_text or s.clean_text in seen:
            continue
        if s.id in ids:
            raise DataError(f"augmented sample id {s.id!r} collides with an existing id")
        seen.add(s.clean_text)
        ids.add(s.id)
        samples.append(s)
        prov.append(p)
    return AugmentedCorpus(original.schema, tuple(samples), tuple(prov))


def augment_deletion(corpus: LabeledCorpus, lexicon: OffensiveLexicon) -> AugmentedCorpus:
    return merge_augmented(corpus, (delete_boundary_tokens(s, lexicon) for s in corpus), DELETED)


def augment_generated(corpus: LabeledCorpus, continuations: Mapping[str, str]) -> AugmentedCorpus:
    extra = [generated_sample(s, continuations[s.id]) for s in corpus if s.id in continuations]
    return merge_augmented(corpus, extra, GENERATED)


def write_augmented(aug: AugmentedCorpus, path, delimiter: str | None = None) -> None:
    """Write in the source dataset's column layout plus a ``provenance`` column."""
    schema = aug.schema
    if schema.dataset == "OLID":
        header = ["id", "tweet", "subtask_a", "subtask_b", "subtask_c"]
        col = {"A": 2, "B": 3, "C": 4}[schema.task]
        delimiter = "\t"
    else:
        header = ["_id", "text", "task_1", "task_2"]
        col = {"A": 2, "B": 3}[schema.task]
        delimiter = delimiter or ","
    quoting = csv.QUOTE_NONE if schema.dataset == "OLID" else csv.QUOTE_MINIMAL
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, quoting=quoting, escapechar="\\" if quoting == csv.QUOTE_NONE else None)
        w.writerow(header + ["provenance"])
        for s, p in zip(aug.samples, aug.provenance):
            row = [s.id, s.clean_text] + ["NULL"] * (len(header) - 2)
            row[col] = s.label
            w.writerow(row + [p])
