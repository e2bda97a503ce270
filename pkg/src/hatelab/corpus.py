"""OLID and HASOC 2021 readers, task schemas and the train/dev split."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import textprep
from .errors import DataError, SchemaError


@dataclass(frozen=True)
class TaskSchema:
    dataset: str
    task: str
    label_set: tuple[str, ...]

    @property
    def name(self) -> str:
        return f"{self.dataset.lower()}-{self.task.lower()}"

    def index(self, label: str) -> int:
        return self.label_set.index(label)


SCHEMAS: dict[tuple[str, str], TaskSchema] = {
    ("OLID", "A"): TaskSchema("OLID", "A", ("OFF", "NOT")),
    ("OLID", "B"): TaskSchema("OLID", "B", ("TIN", "UNT")),
    ("OLID", "C"): TaskSchema("OLID", "C", ("IND", "GRP", "OTH")),
    ("HASOC2021", "A"): TaskSchema("HASOC2021", "A", ("HOF", "NOT")),
    ("HASOC2021", "B"): TaskSchema("HASOC2021", "B", ("HATE", "OFFN", "PRFN", "NONE")),
}

# Labels that count as the non-offensive side when colouring attributions.
BENIGN_LABELS = frozenset({"NOT", "NONE"})

OLID_COLUMNS = {"A": "subtask_a", "B": "subtask_b", "C": "subtask_c"}
HASOC_COLUMNS = {"A": "task_1", "B": "task_2"}

# "NONE" is a real HASOC class, so it is deliberately absent here.
EMPTY_LABELS = frozenset({"", "NULL", "null", "nan", "NaN", "NA"})


def get_schema(selector: str) -> TaskSchema:
    """Resolve a selector such as ``"hasoc-a"`` or ``"olid-c"``."""
    try:
        ds, task = selector.strip().split("-")
    except ValueError:
        raise ValueError(f"task selector must look like 'olid-a' or 'hasoc-b', got {selector!r}") from None
    ds = {"olid": "OLID", "hasoc": "HASOC2021", "hasoc2021": "HASOC2021"}.get(ds.lower())
    key = (ds, task.upper())
    if key not in SCHEMAS:
        raise ValueError(f"unknown task {selector!r}")
    return SCHEMAS[key]


@dataclass(frozen=True)
class Sample:
    id: str
    raw_text: str
    label: str
    clean_text: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.id:
            raise DataError("sample id must be non-empty")
        object.__setattr__(self, "clean_text", textprep.clean(self.raw_text))

    @property
    def tokens(self) -> list[str]:
        return textprep.tokenize(self.clean_text)


@dataclass(frozen=True)
class LabeledCorpus:
    schema: TaskSchema
    samples: tuple[Sample, ...]

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        seen: set[str] = set()
        for s in self.samples:
            if s.id in seen:
                raise DataError(f"duplicate sample id {s.id!r}")
            seen.add(s.id)
            if s.label not in self.schema.label_set:
                raise DataError(f"row {s.id}: label {s.label!r} not in {self.schema.label_set}")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.samples]

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.samples]

    def label_indices(self) -> np.ndarray:
        return np.array([self.schema.index(s.label) for s in self.samples], dtype=np.int64)


def sniff_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def read_rows(path, delimiter: str | None = None, quoting: int = csv.QUOTE_MINIMAL) -> tuple[list[str], list[dict[str, str]], str]:
    """Read a delimited UTF-8 file into header, row dicts and the delimiter used."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if delimiter is None:
            delimiter = sniff_delimiter(first)
        fh.seek(0)
        reader = csv.DictReader(fh, delimiter=delimiter, quoting=quoting)
        rows = list(reader)
        header = list(reader.fieldnames or [])
    return header, rows, delimiter


def _build(rows, schema: TaskSchema, id_col: str, text_col: str, label_col: str, header: Sequence[str]) -> LabeledCorpus:
    for col in (id_col, text_col, label_col):
        if col not in header:
            raise SchemaError(f"missing required column {col!r}")
    samples = []
    seen: set[str] = set()
    for row in rows:
        rid = (row.get(id_col) or "").strip()
        label = (row.get(label_col) or "").strip()
        if label in EMPTY_LABELS:
            continue
        if label not in schema.label_set:
            raise DataError(f"row {rid}: unknown label {label!r} for {schema.name}")
        if not rid:
            raise DataError("row with empty id")
        if rid in seen:
            raise DataError(f"duplicate id {rid!r}")
        seen.add(rid)
        text = row.get(text_col) or ""
        if not text.strip():
            raise DataError(f"row {rid}: empty text")
        samples.append(Sample(rid, text, label))
    return LabeledCorpus(schema, tuple(samples))


def parse_olid(path, task: str) -> LabeledCorpus:
    task = task.upper()
    schema = SCHEMAS[("OLID", task)]
    # OLID tweets carry bare quote characters; fields are never quoted.
    header, rows, _ = read_rows(path, delimiter="\t", quoting=csv.QUOTE_NONE)
    return _build(rows, schema, "id", "tweet", OLID_COLUMNS[task], header)


def parse_hasoc(path, task: str) -> LabeledCorpus:
    task = task.upper()
    schema = SCHEMAS[("HASOC2021", task)]
    header, rows, _ = read_rows(path)
    return _build(rows, schema, "_id", "text", HASOC_COLUMNS[task], header)


def parse(path, selector: str) -> LabeledCorpus:
    schema = get_schema(selector)
    if schema.dataset == "OLID":
        return parse_olid(path, schema.task)
    return parse_hasoc(path, schema.task)


def split_dev(corpus: LabeledCorpus, fraction: float = 0.1, seed: int = 0) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Uniform random (unstratified) split; both halves keep file order."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    if not len(corpus):
        raise ValueError("cannot split an empty corpus")
    n = len(corpus)
    n_dev = int(math.floor(fraction * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    dev_idx = set(perm[:n_dev].tolist())
    train = tuple(s for i, s in enumerate(corpus.samples) if i not in dev_idx)
    dev = tuple(s for i, s in enumerate(corpus.samples) if i in dev_idx)
    return LabeledCorpus(corpus.schema, train), LabeledCorpus(corpus.schema, dev)
