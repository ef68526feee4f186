"""Dated, tagged sentences: loading, validation, sampling, truncation,
train/test splitting, vocabulary and tag inventory.

Corpus interchange format is JSON lines, one object per sentence::

    {"year": 1817, "tokens": ["hello", "world"], "tags": ["UH", "NN"]}

Files are UTF-8 and pre-tokenized; this module never tokenizes raw text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ParseError
from .mathcore import Rng

PAD = "<PAD>"
UNK = "<UNK>"
PAD_ID = 0
UNK_ID = 1

DEFAULT_YEAR_MIN = 1810
DEFAULT_YEAR_MAX = 2009


@dataclass
class DatedSentence:
    """One sentence with its gold tags and calendar year of composition."""

    year: int
    tokens: list[str]
    tags: list[str]

    def validate(self, year_min: int | None = None, year_max: int | None = None) -> None:
        if not self.tokens:
            raise ValueError("sentence has no tokens")
        if len(self.tokens) != len(self.tags):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.tags)} tags"
            )
        if year_min is not None and year_max is not None:
            if not (year_min <= self.year <= year_max):
                raise ValueError(
                    f"year {self.year} outside corpus range {year_min}-{year_max}"
                )

    def decade(self) -> int:
        return (self.year // 10) * 10


@dataclass
class CorpusSplit:
    train: list[DatedSentence]
    test: list[DatedSentence]
    fraction: float
    seed: int


def load_corpus(
    path: str | Path,
    year_min: int = DEFAULT_YEAR_MIN,
    year_max: int = DEFAULT_YEAR_MAX,
) -> list[DatedSentence]:
    """Read and validate a JSON-lines corpus file.

    Malformed lines and invariant violations raise :class:`ParseError`
    carrying the 1-based line number. An empty file yields an empty list.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    sentences = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", path, lineno) from exc
            try:
                sent = DatedSentence(
                    year=int(obj["year"]),
                    tokens=[str(t) for t in obj["tokens"]],
                    tags=[str(t) for t in obj["tags"]],
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad record: {exc}", path, lineno) from exc
            try:
                sent.validate(year_min, year_max)
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from exc
            sentences.append(sent)
    return sentences


def save_corpus(path: str | Path, sentences: list[DatedSentence]) -> None:
    """Write sentences in the JSON-lines interchange format (UTF-8)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for sent in sentences:
            fh.write(
                json.dumps(
                    {"year": sent.year, "tokens": sent.tokens, "tags": sent.tags},
                    ensure_ascii=False,
                )
                + "\n"
            )


def balanced_sample(
    corpus: list[DatedSentence],
    per_decade: int,
    rng: Rng,
    year_min: int | None = None,
    year_max: int | None = None,
) -> list[DatedSentence]:
    """Sample exactly ``per_decade`` sentences from every decade, without
    replacement, then shuffle the union deterministically.

    Decades are taken from ``[year_min, year_max]`` when given, otherwise
    from the span of years present in the corpus. A decade with fewer than
    ``per_decade`` sentences raises :class:`DataError` naming it.
    """
    if per_decade < 1:
        raise ValueError(f"per_decade must be >= 1, got {per_decade}")
    if not corpus:
        raise DataError("cannot sample from an empty corpus")
    by_decade: dict[int, list[DatedSentence]] = {}
    for sent in corpus:
        by_decade.setdefault(sent.decade(), []).append(sent)
    if year_min is None:
        year_min = min(s.year for s in corpus)
    if year_max is None:
        year_max = max(s.year for s in corpus)
    decades = range((year_min // 10) * 10, (year_max // 10) * 10 + 1, 10)
    picked: list[DatedSentence] = []
    for decade in decades:
        pool = by_decade.get(decade, [])
        if len(pool) < per_decade:
            raise DataError(
                f"decade {decade}s has {len(pool)} sentences, need {per_decade}"
            )
        sub = rng.fork(f"decade:{decade}")
        for i in sub.sample_indices(len(pool), per_decade):
            picked.append(pool[i])
    return rng.fork("balanced-shuffle").shuffled(picked)


def truncate(sentences: list[DatedSentence], max_len: int) -> list[DatedSentence]:
    """Cut every sentence to its first ``max_len`` tokens and tags."""
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    out = []
    for sent in sentences:
        if len(sent.tokens) <= max_len:
            out.append(sent)
        else:
            out.append(
                DatedSentence(sent.year, sent.tokens[:max_len], sent.tags[:max_len])
            )
    return out


def split(sentences: list[DatedSentence], fraction: float, rng: Rng) -> CorpusSplit:
    """Shuffle deterministically and partition into train/test.

    The train size is ``round-half-up(fraction * n)``.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"split fraction must be in (0, 1), got {fraction}")
    if len(sentences) < 2:
        raise ValueError("need at least 2 sentences to split")
    shuffled = rng.shuffled(sentences)
    n_train = int(np.floor(fraction * len(sentences) + 0.5))
    return CorpusSplit(
        train=shuffled[:n_train],
        test=shuffled[n_train:],
        fraction=fraction,
        seed=rng.seed,
    )


class Vocabulary:
    """Word-to-id map with reserved PAD (0) and UNK (1) entries.

    Retains the most frequent words up to ``max_size``; frequency ties are
    broken lexicographically. Encoding never fails: out-of-vocabulary words
    map to UNK.
    """

    def __init__(self, words: list[str]):
        self.id_to_word = [PAD, UNK] + list(words)
        self.word_to_id = {w: i for i, w in enumerate(self.id_to_word)}
        if len(self.word_to_id) != len(self.id_to_word):
            raise ValueError("duplicate words in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_word)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_id

    def encode(self, tokens: list[str]) -> np.ndarray:
        return np.array(
            [self.word_to_id.get(t, UNK_ID) for t in tokens], dtype=np.int32
        )

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for i, w in enumerate(self.id_to_word):
                fh.write(f"{w}\t{i}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        words = _read_id_lines(path)
        if words[:2] != [PAD, UNK]:
            raise DataError(f"vocabulary file {path} lacks PAD/UNK header rows")
        return cls(words[2:])


class TagSet:
    """Tag-to-id map built from training data, in first-occurrence order."""

    def __init__(self, tags: list[str]):
        self.id_to_tag = list(tags)
        self.tag_to_id = {t: i for i, t in enumerate(self.id_to_tag)}
        if len(self.tag_to_id) != len(self.id_to_tag):
            raise ValueError("duplicate tags in tag set")

    def __len__(self) -> int:
        return len(self.id_to_tag)

    def encode(self, tags: list[str]) -> np.ndarray:
        """Tag ids; unseen tags get -1 (scored as automatic misses)."""
        return np.array(
            [self.tag_to_id.get(t, -1) for t in tags], dtype=np.int32
        )

    def save(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for i, t in enumerate(self.id_to_tag):
                fh.write(f"{t}\t{i}\n")

    @classmethod
    def load(cls, path: str | Path) -> "TagSet":
        return cls(_read_id_lines(path))


def _read_id_lines(path: str | Path) -> list[str]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    items = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError("expected token<TAB>id", path, lineno)
            token, id_str = parts
            if int(id_str) != len(items):
                raise ParseError(f"non-contiguous id {id_str}", path, lineno)
            items.append(token)
    return items


def build_vocab(train: list[DatedSentence], max_size: int) -> Vocabulary:
    """Vocabulary of the ``max_size`` most frequent training words."""
    if not train:
        raise ValueError("cannot build a vocabulary from an empty training set")
    if max_size < 1:
        raise ValueError(f"max_size must be >= 1, got {max_size}")
    counts: dict[str, int] = {}
    for sent in train:
        for tok in sent.tokens:
            counts[tok] = counts.get(tok, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary([w for w, _ in ranked[:max_size]])


def build_tagset(train: list[DatedSentence]) -> TagSet:
    """Tag inventory from training data, ids in first-occurrence order."""
    if not train:
        raise ValueError("cannot build a tag set from an empty training set")
    seen: dict[str, None] = {}
    for sent in train:
        for tag in sent.tags:
            seen.setdefault(tag)
    return TagSet(list(seen))
