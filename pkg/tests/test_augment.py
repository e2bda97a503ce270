import csv
import string
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hatelab.augment import (
    DELETED,
    GENERATED,
    ORIGINAL,
    OffensiveLexicon,
    augment_deletion,
    augment_generated,
    delete_boundary_tokens,
    generated_sample,
    load_wordlist,
    merge_augmented,
    read_continuations,
    write_augmented,
)
from hatelab.corpus import SCHEMAS, LabeledCorpus, Sample, parse
from hatelab.errors import DataError

NAMED_REMOVALS = ["african", "american", "arab", "canadian", "european", "angry"]
HASOC_A = SCHEMAS[("HASOC2021", "A")]


def lexicon_fixture(tmp_path):
    """1,383 distinct terms and 160 removals (six of them named), as in the source list."""
    rng = np.random.default_rng(0)
    letters = list(string.ascii_lowercase)
    terms = list(NAMED_REMOVALS)
    seen = set(terms)
    while len(terms) < 1383:
        w = "".join(rng.choice(letters, size=int(rng.integers(4, 9))))
        if w not in seen:
            seen.add(w)
            terms.append(w)
    removals = NAMED_REMOVALS + terms[6:160]
    words = tmp_path / "words.txt"
    # mixed case and a repeated entry exercise lowercasing and dedup
    words.write_text("\n".join([t.upper() if i % 7 == 0 else t for i, t in enumerate(terms)] + [terms[200]]) + "\n")
    rem = tmp_path / "removals.txt"
    rem.write_text("\n".join(removals) + "\n")
    return words, rem


def lex(*words):
    return OffensiveLexicon(frozenset(words))


def corpus(*texts, labels=None):
    labels = labels or ["HOF"] * len(texts)
    return LabeledCorpus(HASOC_A, tuple(Sample(f"x{i}", t, l) for i, (t, l) in enumerate(zip(texts, labels))))


class TestWordlist:
    def test_canonical_count(self, tmp_path):
        lx = load_wordlist(*lexicon_fixture(tmp_path))
        assert len(lx) == 1223
        assert len(lx.removed_words) == 160
        assert not lx.words & lx.removed_words
        for w in NAMED_REMOVALS:
            assert w not in lx

    def test_dedup_and_case(self, tmp_path):
        p = tmp_path / "w.txt"
        p.write_text("Idiot\nidiot\n\nmoron\n")
        lx = load_wordlist(p)
        assert lx.words == {"idiot", "moron"}

    def test_empty(self, tmp_path):
        p = tmp_path / "w.txt"
        p.write_text("\n\n")
        with pytest.raises(DataError):
            load_wordlist(p)


class TestDeletion:
    def test_no_hits(self):
        s = delete_boundary_tokens(Sample("a", "hello world today", "NOT"), lex("idiot"))
        assert s.clean_text == "world" and s.label == "NOT"

    def test_boundary_hit_unchanged(self):
        orig = Sample("a", "you are an idiot", "HOF")
        assert delete_boundary_tokens(orig, lex("idiot")) is orig
        orig = Sample("b", "Idiot you are", "HOF")
        assert delete_boundary_tokens(orig, lex("idiot")) is orig

    def test_single_token_discarded(self):
        aug = augment_deletion(corpus("hello"), lex())
        assert [s.clean_text for s in aug.samples] == ["hello"]
        assert aug.provenance == (ORIGINAL,)

    def test_boundary_offensive_survives_once(self):
        aug = augment_deletion(corpus("you are an idiot", "hello big world"), lex("idiot"))
        texts = [s.clean_text for s in aug.samples]
        assert texts.count("you are an idiot") == 1
        assert texts == ["you are an idiot", "hello big world", "big"]
        assert aug.provenance == (ORIGINAL, ORIGINAL, DELETED)


class TestGenerated:
    def test_published_example(self):
        orig = corpus("SHOOT NOW ASSHOLE")
        aug = augment_generated(orig, {"x0": "Booking was successful. Reference number is : N0LQRA43."})
        texts = [s.clean_text for s in aug.samples]
        assert texts == ["shoot now asshole", "shoot now asshole booking was successful reference number is nlqra"]
        assert aug.provenance == (ORIGINAL, GENERATED)
        assert aug.samples[1].id == "x0#gen"

    def test_at_most_doubles(self):
        orig = corpus("a b", "c d", "a b", "e")
        aug = augment_generated(orig, {"x0": "more", "x1": "", "x2": "more", "x3": "!!!"})
        assert len(aug) <= 2 * len(orig)

    def test_read_continuations(self, tmp_path):
        p = tmp_path / "c.tsv"
        p.write_text("x0\thello there\n\nx1\tbye\n")
        assert read_continuations(p) == {"x0": "hello there", "x1": "bye"}
        p.write_text("no tab here\n")
        with pytest.raises(DataError, match=":1"):
            read_continuations(p)


class TestMerge:
    def test_label_outside_schema(self):
        with pytest.raises(DataError):
            merge_augmented(corpus("a b"), [Sample("z", "q", "OFFN")])

    def test_empty_dropped(self):
        aug = merge_augmented(corpus("a b"), [Sample("z", "123", "NOT")])
        assert len(aug) == 1

    def test_write_roundtrip(self, tmp_path):
        aug = augment_deletion(corpus("one two three", "x", labels=["HOF", "NOT"]), lex())
        p = tmp_path / "aug.csv"
        write_augmented(aug, p)
        back = parse(p, "hasoc-a")
        assert [s.clean_text for s in back] == [s.clean_text for s in aug.samples]
        with p.open() as fh:
            rows = list(csv.DictReader(fh))
        assert [r["provenance"] for r in rows] == list(aug.provenance)


WORDS = ["idiot", "moron", "hello", "world", "big", "small", "red", "blue"]


@st.composite
def corpora(draw):
    n = draw(st.integers(1, 25))
    texts = [" ".join(draw(st.lists(st.sampled_from(WORDS), min_size=1, max_size=6))) for _ in range(n)]
    labels = draw(st.lists(st.sampled_from(["HOF", "NOT"]), min_size=n, max_size=n))
    return corpus(*texts, labels=labels)


class TestProperties:
    @given(corpora())
    @settings(max_examples=200, deadline=None)
    def test_deletion_invariants(self, c):
        lx = lex("idiot", "moron")
        aug = augment_deletion(c, lx)
        texts = [s.clean_text for s in aug.samples]
        assert len(texts) == len(set(texts))
        assert all(texts)
        for s in c:
            t = s.tokens
            if t[0] in lx or t[-1] in lx:
                assert texts.count(s.clean_text) == 1
        src = {s.id: s for s in c}
        used = Counter()
        for s, prov in zip(aug.samples, aug.provenance):
            if prov == DELETED:
                parent = src[s.id.removesuffix("#del")]
                assert s.label == parent.label
                used[parent.id] += 1
        assert all(v == 1 for v in used.values())
        assert len(aug) <= 2 * len(c)

    @given(corpora(), st.lists(st.sampled_from(WORDS + ["!!", "42"]), max_size=4))
    @settings(max_examples=100, deadline=None)
    def test_generated_invariants(self, c, cont):
        aug = augment_generated(c, {s.id: " ".join(cont) for s in c})
        texts = [s.clean_text for s in aug.samples]
        assert len(texts) == len(set(texts))
        assert len(aug) <= 2 * len(c)
