"""Embedding tables: a static word table and a trainable year table.

Word vectors come from a textual word2vec file (``word v1 ... v_d`` per
line, optional ``count dim`` header). Words missing from the file get
normal draws seeded per word, so the vector a word receives does not
depend on vocabulary iteration order or on which other words are present.
The PAD row is always the zero vector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import PAD_ID, Vocabulary
from .errors import DataError, ParseError
from .mathcore import Rng, xavier_init

log = logging.getLogger(__name__)

DEFAULT_OOV_SIGMA = 0.1


@dataclass
class WordTable:
    """Static |vocab| x d_w embedding matrix; never updated by training."""

    matrix: np.ndarray
    trainable: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass
class YearTable:
    """Trainable per-year embedding matrix, row ``year - year_min``."""

    year_min: int
    year_max: int
    matrix: np.ndarray
    trainable: bool = True

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.year_min, self.year_max + 1)

    def contains(self, year: int) -> bool:
        return self.year_min <= year <= self.year_max

    def index(self, year: int) -> int:
        if not self.contains(year):
            raise ValueError(
                f"year {year} outside table range {self.year_min}-{self.year_max}"
            )
        return year - self.year_min

    def row(self, year: int) -> np.ndarray:
        return self.matrix[self.index(year)]


def _parse_vector_line(line: str, d_w: int, path, lineno: int):
    parts = line.rstrip("\n").split(" ")
    # tolerate a "count dim" header on the first line
    if lineno == 1 and len(parts) == 2:
        try:
            int(parts[0]), int(parts[1])
            return None
        except ValueError:
            pass
    word = parts[0]
    values = [p for p in parts[1:] if p]
    if len(values) != d_w:
        raise ParseError(
            f"word {word!r} has {len(values)} components, expected {d_w}",
            path,
            lineno,
        )
    try:
        vec = np.array([float(v) for v in values], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(f"word {word!r}: {exc}", path, lineno) from exc
    return word, vec


def load_word_table(
    path: str | Path | None,
    vocab: Vocabulary,
    d_w: int,
    rng: Rng,
    oov_sigma: float = DEFAULT_OOV_SIGMA,
) -> WordTable:
    """Build the static word table for a vocabulary.

    In-file words take their file vectors; everything else (including UNK)
    gets i.i.d. N(0, oov_sigma^2) draws from ``rng.fork("oov:" + word)``,
    so each unknown word has a distinct but reproducible vector. The PAD
    row is zeroed last. ``path=None`` means no file: all rows are random.
    """
    if d_w < 1:
        raise ValueError(f"d_w must be >= 1, got {d_w}")
    file_vectors: dict[str, np.ndarray] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise DataError(f"embedding file not found: {path}")
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                parsed = _parse_vector_line(line, d_w, path, lineno)
                if parsed is None:
                    continue
                word, vec = parsed
                if word in file_vectors:
                    log.warning("duplicate embedding for %r; keeping the last", word)
                if word in vocab:
                    file_vectors[word] = vec

    matrix = np.empty((len(vocab), d_w), dtype=np.float64)
    for idx, word in enumerate(vocab.id_to_word):
        if word in file_vectors:
            matrix[idx] = file_vectors[word]
        else:
            matrix[idx] = rng.fork("oov:" + word).normal(0.0, oov_sigma, size=d_w)
    matrix[PAD_ID] = 0.0
    return WordTable(matrix=matrix)


def init_year_table(year_min: int, year_max: int, d_y: int, rng: Rng) -> YearTable:
    """Glorot-uniform year table with one row per year in [year_min, year_max]."""
    if year_min > year_max:
        raise ValueError(f"inverted year range {year_min}-{year_max}")
    if d_y < 1:
        raise ValueError(f"d_y must be >= 1, got {d_y}")
    n_years = year_max - year_min + 1
    return YearTable(
        year_min=year_min,
        year_max=year_max,
        matrix=xavier_init(n_years, d_y, rng),
    )
