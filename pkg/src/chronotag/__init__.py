"""Diachronic POS taggers with trainable year embeddings.

Train LSTM or feedforward taggers on year-stamped corpora, inspect the
temporal structure of the learned year embeddings with PCA, and date new
sentences by sweeping candidate years, measuring tag perplexity, and
smoothing the curve with LOWESS.
"""

from .corpus import (
    CorpusSplit,
    DatedSentence,
    TagSet,
    Vocabulary,
    build_tagset,
    build_vocab,
    load_corpus,
    save_corpus,
    split,
    truncate,
)
from .embeddings import WordTable, YearTable, init_year_table, load_word_table
from .mathcore import AdamState, Rng, adam_step, stable_softmax, xavier_init
from .model import (
    FEEDFORWARD,
    LSTM,
    GradientSet,
    ModelConfig,
    TaggerParams,
    backward_batch,
    forward,
    forward_batch,
    grad_check,
    init_params,
    loss,
)
from .training import (
    TrainConfig,
    TrainReport,
    evaluate_accuracy,
    load_checkpoint,
    make_batches,
    save_checkpoint,
    train,
)
from .analysis import (
    DatingReport,
    EmbeddingProjection,
    PerplexityCurve,
    date_buckets,
    dating_metric,
    lowess,
    pca_first_component,
    per_sentence_error_report,
    perplexity_sweep,
    predict_year,
    sentence_perplexity,
)
from .synthgen import SynthConfig, generate, verify_frequency_invariance

__version__ = "0.1.0"
