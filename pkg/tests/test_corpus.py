import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronotag.corpus import (
    PAD,
    PAD_ID,
    UNK,
    UNK_ID,
    DatedSentence,
    TagSet,
    Vocabulary,
    balanced_sample,
    build_tagset,
    build_vocab,
    load_corpus,
    save_corpus,
    split,
    truncate,
)
from chronotag.errors import DataError, ParseError
from chronotag.mathcore import Rng


def make_sentence(year=1900, n=4):
    return DatedSentence(
        year=year,
        tokens=[f"w{i}" for i in range(n)],
        tags=[f"T{i % 3}" for i in range(n)],
    )


class TestLoadSave:
    def test_round_trip(self, tmp_path):
        sentences = [make_sentence(1817, 2), make_sentence(1975, 7)]
        path = tmp_path / "corpus.jsonl"
        save_corpus(path, sentences)
        loaded = load_corpus(path)
        assert loaded == sentences

    def test_single_line_parses(self, tmp_path):
        path = tmp_path / "one.jsonl"
        path.write_text(
            json.dumps({"year": 1817, "tokens": ["hello", "world"], "tags": ["UH", "NN"]})
            + "\n"
        )
        (sent,) = load_corpus(path)
        assert sent.year == 1817
        assert sent.tokens == ["hello", "world"]

    def test_empty_file_is_empty_list(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_corpus(path) == []

    def test_length_mismatch_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = json.dumps({"year": 1900, "tokens": ["a"], "tags": ["T"]})
        bad = json.dumps({"year": 1900, "tokens": ["a", "b"], "tags": ["T"]})
        path.write_text(good + "\n" + bad + "\n")
        with pytest.raises(ParseError, match=":2"):
            load_corpus(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"year": 1900, "tokens": ["a"], "tags": ["T"]}\n{oops\n')
        with pytest.raises(ParseError, match=":2"):
            load_corpus(path)

    def test_year_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "range.jsonl"
        save_corpus(path, [make_sentence(1700)])
        with pytest.raises(ParseError, match="1700"):
            load_corpus(path, 1810, 2009)

    def test_missing_file(self):
        with pytest.raises(DataError):
            load_corpus("/nonexistent/corpus.jsonl")

    def test_unicode_round_trip(self, tmp_path):
        sent = DatedSentence(1900, ["café", "über"], ["NN", "JJ"])
        path = tmp_path / "uni.jsonl"
        save_corpus(path, [sent])
        assert load_corpus(path) == [sent]


class TestBalancedSample:
    def _corpus(self, per_decade, decades):
        out = []
        for d in decades:
            for i in range(per_decade):
                out.append(make_sentence(year=d + (i % 10)))
        return out

    def test_uniform_decade_histogram(self):
        corpus = self._corpus(30, range(1810, 1910, 10))
        sample = balanced_sample(corpus, 7, Rng(0))
        counts = {}
        for s in sample:
            counts[s.decade()] = counts.get(s.decade(), 0) + 1
        assert all(c == 7 for c in counts.values())
        assert len(counts) == 10

    def test_exhaustive_sample_is_reordered_corpus(self):
        corpus = self._corpus(1, [1810, 1820, 1830])
        sample = balanced_sample(corpus, 1, Rng(3))
        assert sorted(s.year for s in sample) == sorted(s.year for s in corpus)

    def test_underpopulated_decade_named(self):
        corpus = self._corpus(5, [1850, 1870])  # 1860s missing
        with pytest.raises(DataError, match="1860"):
            balanced_sample(corpus, 2, Rng(0), year_min=1850, year_max=1879)

    def test_deterministic(self):
        corpus = self._corpus(20, range(1810, 1860, 10))
        a = balanced_sample(corpus, 5, Rng(42))
        b = balanced_sample(corpus, 5, Rng(42))
        assert a == b

    def test_no_replacement(self):
        corpus = self._corpus(10, [1900])
        sample = balanced_sample(corpus, 10, Rng(1))
        assert len({id(s) for s in sample}) == 10


class TestTruncate:
    def test_long_sentence_cut(self):
        sent = make_sentence(n=60)
        (out,) = truncate([sent], 50)
        assert out.tokens == sent.tokens[:50]
        assert out.tags == sent.tags[:50]

    def test_short_sentence_unchanged(self):
        sent = make_sentence(n=10)
        assert truncate([sent], 50) == [sent]

    def test_max_len_one(self):
        outs = truncate([make_sentence(n=5), make_sentence(n=1)], 1)
        assert all(len(s.tokens) == 1 for s in outs)

    def test_idempotent(self):
        sents = [make_sentence(n=k) for k in (3, 17, 40)]
        once = truncate(sents, 10)
        assert truncate(once, 10) == once

    def test_bad_max_len(self):
        with pytest.raises(ValueError):
            truncate([], 0)


class TestSplit:
    def test_90_10_arithmetic(self):
        sents = [make_sentence(1900 + i % 50) for i in range(1000)]
        data = split(sents, 0.9, Rng(0))
        assert len(data.train) == 900
        assert len(data.test) == 100

    def test_round_half_up(self):
        sents = [make_sentence(n=2) for _ in range(3)]
        data = split(sents, 0.5, Rng(0))
        assert len(data.train) == 2
        assert len(data.test) == 1

    def test_deterministic(self):
        sents = [make_sentence(1900 + i % 20, n=2 + i % 5) for i in range(40)]
        a, b = split(sents, 0.8, Rng(7)), split(sents, 0.8, Rng(7))
        assert a.train == b.train and a.test == b.test

    def test_fraction_bounds(self):
        sents = [make_sentence(), make_sentence()]
        for bad in (0.0, 1.0, -0.2, 1.7):
            with pytest.raises(ValueError):
                split(sents, bad, Rng(0))

    @settings(deadline=None, max_examples=30)
    @given(st.integers(2, 60), st.floats(0.05, 0.95), st.integers(0, 999))
    def test_preserves_multiset(self, n, fraction, seed):
        sents = [make_sentence(1900 + i, n=1 + i % 4) for i in range(n)]
        data = split(sents, fraction, Rng(seed))
        combined = sorted((s.year, tuple(s.tokens)) for s in data.train + data.test)
        assert combined == sorted((s.year, tuple(s.tokens)) for s in sents)


class TestVocabulary:
    def test_most_frequent_retained(self):
        sents = [DatedSentence(1900, ["a", "a", "b"], ["T", "T", "T"])]
        vocab = build_vocab(sents, 1)
        assert "a" in vocab and "b" not in vocab
        assert vocab.encode(["b"])[0] == UNK_ID

    def test_all_words_when_room(self):
        sents = [DatedSentence(1900, ["x", "y", "z"], ["T"] * 3)]
        vocab = build_vocab(sents, 10)
        assert len(vocab) == 5  # 3 words + PAD + UNK

    def test_tie_breaks_lexicographic(self):
        sents = [DatedSentence(1900, ["dog", "cat"], ["T", "T"])]
        vocab = build_vocab(sents, 1)
        assert "cat" in vocab and "dog" not in vocab

    def test_reserved_ids(self):
        vocab = build_vocab([make_sentence()], 10)
        assert vocab.id_to_word[PAD_ID] == PAD
        assert vocab.id_to_word[UNK_ID] == UNK

    def test_encode_never_fails(self):
        vocab = build_vocab([make_sentence()], 10)
        ids = vocab.encode(["w0", "totally-new", "w1"])
        assert ids[1] == UNK_ID and ids[0] != UNK_ID

    def test_persistence_round_trip(self, tmp_path):
        vocab = build_vocab([make_sentence(n=6)], 4)
        path = tmp_path / "vocab.tsv"
        vocab.save(path)
        loaded = Vocabulary.load(path)
        assert loaded.id_to_word == vocab.id_to_word

    def test_empty_training_set(self):
        with pytest.raises(ValueError):
            build_vocab([], 5)


class TestTagSet:
    def test_distinct_tags_counted(self):
        sents = [DatedSentence(1900, ["a", "b", "c"], ["NN", "VB", "NN"])]
        assert len(build_tagset(sents)) == 2

    def test_first_occurrence_order(self):
        sents = [DatedSentence(1900, ["a", "b", "c"], ["Z", "A", "M"])]
        assert build_tagset(sents).id_to_tag == ["Z", "A", "M"]

    def test_unseen_tag_encodes_to_minus_one(self):
        tagset = build_tagset([make_sentence()])
        assert tagset.encode(["NEVER-SEEN"])[0] == -1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            build_tagset([])

    def test_persistence_round_trip(self, tmp_path):
        tagset = build_tagset([make_sentence(n=5)])
        path = tmp_path / "tags.tsv"
        tagset.save(path)
        assert TagSet.load(path).id_to_tag == tagset.id_to_tag
