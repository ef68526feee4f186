"""Synthetic diachronic corpora with controlled drift.

Each sentence is built from three kinds of segments plus a final period:

* a drift clause ``DET stem stem stem`` whose internal order follows
  template A (verb-medial) or template B (verb-final). The two templates
  emit identically distributed words and the same tag multiset; only the
  order of the verb and object slots differs, so nothing about the word
  sequence reveals the template.
* a context clause ``PRON stem DET stem`` with fixed order, where the
  stem after the pronoun is always a verb and the stem after the
  determiner always a noun. Resolving these requires the preceding token.
* filler phrases over unambiguous word pools, cycled deterministically.

"Stems" are words that occur in both noun and verb roles; their tag is
never recoverable from the word alone. Drift modes:

* ``syntactic`` - template B probability follows a logistic curve in the
  year; word fills are urn-balanced per decade, so the per-decade
  (word, tag) histograms are exactly identical and only order carries
  date information.
* ``lexical`` - order is fixed (template A), but which stems fill verb
  versus noun roles follows a logistic mixture over two stem groups, so
  (word, tag) frequencies drift.
* ``mixed`` - both effects at once.
* ``none`` - no statistic varies with the year.

Generation is deterministic given the config seed; decades are generated
independently and concatenated in order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import DatedSentence
from .mathcore import Rng, sigmoid

LEXICAL = "lexical"
SYNTACTIC = "syntactic"
MIXED = "mixed"
NONE = "none"
MODES = (NONE, LEXICAL, SYNTACTIC, MIXED)

_SYLLABLES = [c + v for c in "bdfgklmnprstvz" for v in "aeiou"]

_DET = ["the", "a", "this", "that", "each", "some"]
_PRON = ["he", "she", "it", "they", "we", "who"]
_PREP = ["of", "in", "on", "with", "under", "over", "near", "from"]
_CONJ = ["and", "or", "but"]
_NUM = ["one", "two", "three", "seven", "ten", "forty"]
_PUNCT = "."


def _make_word(idx: int) -> str:
    """Pronounceable unique token for a global word index (CV syllables)."""
    first, rest = idx % len(_SYLLABLES), idx // len(_SYLLABLES)
    word = _SYLLABLES[first] + _SYLLABLES[rest % len(_SYLLABLES)]
    rest //= len(_SYLLABLES)
    while rest:
        word += _SYLLABLES[rest % len(_SYLLABLES)]
        rest //= len(_SYLLABLES)
    return word


@dataclass
class SynthConfig:
    year_min: int = 1810
    year_max: int = 2009
    per_decade: int = 500
    mode: str = MIXED
    slope: float = 30.0  # logistic scale in years; smaller = sharper change
    midpoint: float | None = None
    seed: int = 0
    n_stems: int = 80
    n_nouns: int = 160
    n_verbs: int = 100
    n_adjs: int = 60
    n_advs: int = 40
    max_fillers: int = 2
    # how far the stem-group mixture moves from 50/50 in the lexical modes;
    # < 1 keeps vocabulary change milder than word-order change
    lex_amplitude: float = 0.7

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.year_min > self.year_max:
            raise ValueError(f"inverted year range {self.year_min}-{self.year_max}")
        if self.per_decade < 1:
            raise ValueError(f"per_decade must be >= 1, got {self.per_decade}")
        if not np.isfinite(self.slope) or self.slope <= 0:
            raise ValueError(f"slope must be positive and finite, got {self.slope}")
        if not 0.0 <= self.lex_amplitude <= 1.0:
            raise ValueError(f"lex_amplitude must be in [0, 1], got {self.lex_amplitude}")
        if self.midpoint is None:
            self.midpoint = (self.year_min + self.year_max) / 2.0

    def drift_probability(self, year: int) -> float:
        """Logistic weight of the late-period alternative at a given year."""
        return float(sigmoid(np.array((year - self.midpoint) / self.slope)))

    def lexical_mix(self, year: int) -> float:
        """Late-stem-group weight for verb slots: a damped drift curve."""
        return 0.5 + self.lex_amplitude * (self.drift_probability(year) - 0.5)

    def to_dict(self) -> dict:
        return {
            "year_min": self.year_min,
            "year_max": self.year_max,
            "per_decade": self.per_decade,
            "mode": self.mode,
            "slope": self.slope,
            "midpoint": self.midpoint,
            "seed": self.seed,
            "n_stems": self.n_stems,
            "n_nouns": self.n_nouns,
            "n_verbs": self.n_verbs,
            "n_adjs": self.n_adjs,
            "n_advs": self.n_advs,
            "max_fillers": self.max_fillers,
            "lex_amplitude": self.lex_amplitude,
        }


@dataclass
class Slot:
    tag: str
    pool: str  # word pool name; also the urn key together with the tag


@dataclass
class GrammarTemplate:
    """An ordered slot sequence; every slot binds a tag and a word pool."""

    name: str
    slots: list[Slot]


# Drift clause: same slots, two orders. Slot roles are (subject,
# core verb, core noun); template B moves the verb to clause-final
# position. Tag multisets are identical.
_DRIFT_A = GrammarTemplate(
    "drift_a",
    [Slot("DET", "det"), Slot("NOUN", "stem"), Slot("VERB", "stem"), Slot("NOUN", "stem")],
)
_DRIFT_B = GrammarTemplate(
    "drift_b",
    [Slot("DET", "det"), Slot("NOUN", "stem"), Slot("NOUN", "stem"), Slot("VERB", "stem")],
)
_CONTEXT = GrammarTemplate(
    "context",
    [Slot("PRON", "pron"), Slot("VERB", "stem"), Slot("DET", "det"), Slot("NOUN", "stem")],
)
_FILLERS = [
    GrammarTemplate(
        "filler_pp",
        [Slot("PREP", "prep"), Slot("DET", "det"), Slot("ADJ", "adj"), Slot("NOUN", "noun")],
    ),
    GrammarTemplate(
        "filler_vp",
        [Slot("CONJ", "conj"), Slot("PRON", "pron"), Slot("VERB", "verb"), Slot("ADV", "adv")],
    ),
    GrammarTemplate(
        "filler_np",
        [Slot("NUM", "num"), Slot("NOUN", "noun"), Slot("VERB", "verb")],
    ),
]

# segment orders cycled per sentence so the drift clause moves around
_ARRANGEMENTS = [
    ("drift", "context", "fillers"),
    ("context", "drift", "fillers"),
    ("fillers", "drift", "context"),
    ("context", "fillers", "drift"),
]

TAGS = ("DET", "NOUN", "VERB", "PRON", "PREP", "ADJ", "ADV", "CONJ", "NUM", "PUNCT")


def build_pools(config: SynthConfig) -> dict[str, list[str]]:
    """Word pools; generated pools are disjoint ranges of a global index."""
    pools = {
        "det": list(_DET),
        "pron": list(_PRON),
        "prep": list(_PREP),
        "conj": list(_CONJ),
        "num": list(_NUM),
    }
    reserved = {w for pool in pools.values() for w in pool} | {_PUNCT}
    idx = 0
    for name, size in (
        ("stem", config.n_stems),
        ("noun", config.n_nouns),
        ("verb", config.n_verbs),
        ("adj", config.n_adjs),
        ("adv", config.n_advs),
    ):
        pool = []
        while len(pool) < size:
            word = _make_word(idx)
            idx += 1
            if word not in reserved:  # closed-class words can be CV-shaped too
                pool.append(word)
        pools[name] = pool
    return pools


def _sentence_plan(config: SynthConfig, i: int) -> tuple[tuple, list[int]]:
    """Deterministic structure of sentence ``i`` within its decade.

    Filler counts and types cycle with ``i`` so that every decade has an
    identical multiset of sentence structures.
    """
    arrangement = _ARRANGEMENTS[i % len(_ARRANGEMENTS)]
    n_fillers = i % (config.max_fillers + 1)
    filler_types = [(i + j) % len(_FILLERS) for j in range(n_fillers)]
    return arrangement, filler_types


def _decade_slot_counts(config: SynthConfig) -> dict[tuple[str, str], int]:
    """Number of draws per (pool, tag) urn across one decade."""
    counts: dict[tuple[str, str], int] = {}

    def add(template: GrammarTemplate):
        for slot in template.slots:
            key = (slot.pool, slot.tag)
            counts[key] = counts.get(key, 0) + 1

    for i in range(config.per_decade):
        _, filler_types = _sentence_plan(config, i)
        add(_DRIFT_A)  # drift templates share slot roles; A stands for both
        add(_CONTEXT)
        for ft in filler_types:
            add(_FILLERS[ft])
    return counts


def _balanced_counts(total: int, pool_size: int) -> list[int]:
    """Each word's draw count: totals split as evenly as integers allow.

    The remainder goes to the lowest-indexed words, identically in every
    decade, so per-decade histograms stay exactly equal.
    """
    base, rem = divmod(total, pool_size)
    return [base + (1 if i < rem else 0) for i in range(pool_size)]


class _Urn:
    """Pre-shuffled balanced multiset of words, consumed sequentially."""

    def __init__(self, pool: list[str], total: int, rng: Rng):
        seq = []
        for word, count in zip(pool, _balanced_counts(total, len(pool))):
            seq.extend([word] * count)
        self._seq = rng.shuffled(seq)
        self._next = 0

    def draw(self) -> str:
        word = self._seq[self._next]
        self._next += 1
        return word


class _DecadeFiller:
    """Supplies words for slots within one decade.

    Fixed pools always come from urns. Stem slots come from urns in the
    order-drift-only modes (exact frequency invariance) and from a
    year-conditioned two-group mixture in the lexically drifting modes.
    """

    def __init__(self, config: SynthConfig, pools: dict[str, list[str]], rng: Rng):
        self.config = config
        self.pools = pools
        self.lexical = config.mode in (LEXICAL, MIXED)
        self.urns = {}
        for (pool, tag), total in sorted(_decade_slot_counts(config).items()):
            if self.lexical and pool == "stem":
                continue
            self.urns[(pool, tag)] = _Urn(
                pools[pool], total, rng.fork(f"urn:{pool}:{tag}")
            )
        if self.lexical:
            half = len(pools["stem"]) // 2
            self.early_stems = pools["stem"][:half]
            self.late_stems = pools["stem"][half:]
            self.lex_rng = rng.fork("lexical")

    def draw(self, slot: Slot, year: int) -> str:
        if self.lexical and slot.pool == "stem":
            q = self.config.lexical_mix(year)
            # verb slots move from the early to the late stem group over
            # time; noun slots move the opposite way
            late = self.lex_rng.uniform() < (q if slot.tag == "VERB" else 1.0 - q)
            group = self.late_stems if late else self.early_stems
            return group[self.lex_rng.randint(len(group))]
        return self.urns[(slot.pool, slot.tag)].draw()


def generate(config: SynthConfig) -> list[DatedSentence]:
    """Generate the corpus: decades in order, deterministic given the seed."""
    pools = build_pools(config)
    rng = Rng(config.seed)
    sentences: list[DatedSentence] = []
    first_decade = (config.year_min // 10) * 10
    last_decade = (config.year_max // 10) * 10
    for decade in range(first_decade, last_decade + 1, 10):
        drng = rng.fork(f"decade:{decade}")
        filler_source = _DecadeFiller(config, pools, drng.fork("words"))
        year_rng = drng.fork("years")
        template_rng = drng.fork("templates")
        lo = max(decade, config.year_min)
        hi = min(decade + 9, config.year_max)
        for i in range(config.per_decade):
            year = lo + year_rng.randint(hi - lo + 1)
            use_b = config.mode in (SYNTACTIC, MIXED) and (
                template_rng.uniform() < config.drift_probability(year)
            )
            drift = _DRIFT_B if use_b else _DRIFT_A
            arrangement, filler_types = _sentence_plan(config, i)
            tokens: list[str] = []
            tags: list[str] = []

            def emit(template: GrammarTemplate):
                for slot in template.slots:
                    tokens.append(filler_source.draw(slot, year))
                    tags.append(slot.tag)

            for segment in arrangement:
                if segment == "drift":
                    emit(drift)
                elif segment == "context":
                    emit(_CONTEXT)
                else:
                    for ft in filler_types:
                        emit(_FILLERS[ft])
            tokens.append(_PUNCT)
            tags.append("PUNCT")
            sentences.append(DatedSentence(year=year, tokens=tokens, tags=tags))
    return sentences


# ---------------------------------------------------------------------------
# Frequency-invariance verification


@dataclass
class InvarianceReport:
    max_tvd: float
    worst_pair: tuple[int, int] | None
    threshold: float
    passed: bool
    decades: list[int] = field(default_factory=list)

    def lines(self) -> list[str]:
        status = "pass" if self.passed else "FAIL"
        pair = (
            f"{self.worst_pair[0]}s vs {self.worst_pair[1]}s"
            if self.worst_pair
            else "n/a"
        )
        return [
            f"frequency invariance: {status}",
            f"max total-variation distance {self.max_tvd:.5f} ({pair}), "
            f"threshold {self.threshold}",
        ]


def verify_frequency_invariance(
    corpus: list[DatedSentence], threshold: float = 0.02
) -> InvarianceReport:
    """Compare per-decade unigram (word, tag) histograms.

    Passes when the total-variation distance between every pair of decade
    histograms stays below the threshold. A corpus whose word-tag usage
    drifts over time (lexical modes) fails by design.
    """
    by_decade: dict[int, dict[tuple[str, str], int]] = {}
    totals: dict[int, int] = {}
    for sent in corpus:
        hist = by_decade.setdefault(sent.decade(), {})
        for tok, tag in zip(sent.tokens, sent.tags):
            hist[(tok, tag)] = hist.get((tok, tag), 0) + 1
        totals[sent.decade()] = totals.get(sent.decade(), 0) + len(sent.tokens)
    decades = sorted(by_decade)
    max_tvd = 0.0
    worst = None
    for a_pos, a in enumerate(decades):
        for b in decades[a_pos + 1 :]:
            ha, hb = by_decade[a], by_decade[b]
            na, nb = totals[a], totals[b]
            keys = set(ha) | set(hb)
            tvd = 0.5 * sum(
                abs(ha.get(k, 0) / na - hb.get(k, 0) / nb) for k in keys
            )
            if tvd > max_tvd:
                max_tvd, worst = tvd, (a, b)
    return InvarianceReport(
        max_tvd=max_tvd,
        worst_pair=worst,
        threshold=threshold,
        passed=max_tvd < threshold,
        decades=decades,
    )
