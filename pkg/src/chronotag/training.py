"""Mini-batch training loop, token-accuracy evaluation, and checkpoints.

Batches are padded straight to ``max_len`` (no length bucketing); the mask
marks real tokens and padded positions never contribute to loss, gradient,
or accuracy. Training aborts on a non-finite loss rather than clipping
silently; optional global-norm gradient clipping is off by default.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import PAD_ID, CorpusSplit, DatedSentence, TagSet, Vocabulary
from .embeddings import WordTable, YearTable
from .errors import DataError, NumericalError
from .mathcore import AdamState, Rng, adam_step, sgd_step
from .model import GradientSet, ModelConfig, TaggerParams, backward_batch, forward_batch, loss

ADAM = "adam"
SGD = "sgd"


@dataclass
class TrainConfig:
    batch_size: int = 100
    learning_rate: float = 0.001
    epochs: int = 1
    seed: int = 0
    shuffle: bool = True
    optimizer: str = ADAM
    grad_clip: float | None = None
    log_every: int = 50

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in (ADAM, SGD):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class Batch:
    token_ids: np.ndarray  # (B, max_len) int32
    tag_ids: np.ndarray  # (B, max_len) int32, -1 where padded or unseen
    mask: np.ndarray  # (B, max_len) bool
    years: np.ndarray  # (B,) int32


@dataclass
class TrainReport:
    loss_history: list[tuple[int, float]] = field(default_factory=list)
    train_accuracy: float = 0.0
    test_accuracy: float = 0.0
    wall_time_s: float = 0.0
    steps: int = 0

    def to_dict(self) -> dict:
        return {
            "loss_history": [[s, l] for s, l in self.loss_history],
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "wall_time_s": self.wall_time_s,
            "steps": self.steps,
        }


def make_batches(
    sentences: list[DatedSentence],
    vocab: Vocabulary,
    tagset: TagSet,
    batch_size: int,
    max_len: int,
    rng: Rng | None = None,
) -> list[Batch]:
    """Encode, pad, and group sentences; a final short batch is kept.

    With an ``rng``, sentence order is shuffled deterministically first.
    """
    if not sentences:
        raise DataError("no sentences to batch")
    order = list(range(len(sentences)))
    if rng is not None:
        order = rng.shuffled(order)
    batches = []
    for start in range(0, len(order), batch_size):
        chunk = [sentences[i] for i in order[start : start + batch_size]]
        B = len(chunk)
        token_ids = np.full((B, max_len), PAD_ID, dtype=np.int32)
        tag_ids = np.full((B, max_len), -1, dtype=np.int32)
        mask = np.zeros((B, max_len), dtype=bool)
        years = np.zeros(B, dtype=np.int32)
        for row, sent in enumerate(chunk):
            n = len(sent.tokens)
            if n > max_len:
                raise ValueError(
                    f"sentence of length {n} exceeds max_len {max_len}; truncate first"
                )
            token_ids[row, :n] = vocab.encode(sent.tokens)
            tag_ids[row, :n] = tagset.encode(sent.tags)
            mask[row, :n] = True
            years[row] = sent.year
        batches.append(Batch(token_ids, tag_ids, mask, years))
    return batches


def _clip_gradients(grads: GradientSet, clip: float) -> None:
    total = 0.0
    for _, g in grads.named():
        total += float((g * g).sum())
    norm = np.sqrt(total)
    if norm > clip:
        scale = clip / norm
        for _, g in grads.named():
            g *= scale


def train(
    params: TaggerParams,
    data: CorpusSplit,
    vocab: Vocabulary,
    tagset: TagSet,
    config: TrainConfig,
) -> TrainReport:
    """Train ``params`` in place on the split's training half.

    Each epoch reshuffles (when enabled) and touches every training
    sentence exactly once. Returns the report with final train and test
    token accuracies.
    """
    start = time.monotonic()
    rng = Rng(config.seed)
    opt_states = {
        name: AdamState(lr=config.learning_rate)
        for name, _ in params.trainable_arrays()
    }
    report = TrainReport()
    step = 0
    interval_losses: list[float] = []
    for epoch in range(config.epochs):
        batches = make_batches(
            data.train,
            vocab,
            tagset,
            config.batch_size,
            params.config.max_len,
            rng.fork(f"epoch:{epoch}") if config.shuffle else None,
        )
        for batch_idx, batch in enumerate(batches):
            log_probs, trace = forward_batch(params, batch.token_ids, batch.years)
            batch_loss = loss(log_probs, batch.tag_ids, batch.mask)
            if not np.isfinite(batch_loss):
                raise NumericalError(
                    f"non-finite loss {batch_loss} at epoch {epoch} batch {batch_idx} "
                    f"(first sentence year {int(batch.years[0])})"
                )
            grads = backward_batch(trace, params, batch.tag_ids, batch.mask)
            if config.grad_clip is not None:
                _clip_gradients(grads, config.grad_clip)
            grad_map = dict(grads.named())
            for name, arr in params.trainable_arrays():
                if config.optimizer == ADAM:
                    adam_step(arr, grad_map[name], opt_states[name])
                else:
                    sgd_step(arr, grad_map[name], config.learning_rate)
            step += 1
            interval_losses.append(batch_loss)
            if step % config.log_every == 0:
                report.loss_history.append((step, float(np.mean(interval_losses))))
                interval_losses = []
    if interval_losses:
        report.loss_history.append((step, float(np.mean(interval_losses))))
    report.steps = step
    report.train_accuracy = evaluate_accuracy(params, data.train, vocab, tagset)
    report.test_accuracy = evaluate_accuracy(params, data.test, vocab, tagset)
    report.wall_time_s = time.monotonic() - start
    return report


def evaluate_accuracy(
    params: TaggerParams,
    sentences: list[DatedSentence],
    vocab: Vocabulary,
    tagset: TagSet,
    batch_size: int = 256,
) -> float:
    """Fraction of real tokens whose argmax tag matches gold.

    Argmax ties break toward the lowest tag id; gold tags unseen in
    training (id -1) count as automatic misses.
    """
    if not sentences:
        raise ValueError("cannot evaluate on an empty sentence list")
    correct = 0
    total = 0
    for batch in make_batches(
        sentences, vocab, tagset, batch_size, params.config.max_len
    ):
        log_probs, _ = forward_batch(
            params, batch.token_ids, batch.years, need_trace=False
        )
        pred = np.argmax(log_probs, axis=-1)
        correct += int(((pred == batch.tag_ids) & batch.mask).sum())
        total += int(batch.mask.sum())
    return correct / total


# ---------------------------------------------------------------------------
# Checkpoints: one self-contained deterministic binary file

_CKPT_MAGIC = b"CHRONOTAG-CKPT-v1\n"


def save_checkpoint(
    path: str | Path,
    params: TaggerParams,
    vocab: Vocabulary,
    tagset: TagSet,
) -> None:
    """Write config, vocabulary, tag set, and all parameter matrices.

    The byte stream is a pure function of its contents (no timestamps),
    so identical runs produce identical files.
    """
    arrays = [("word", params.word.matrix)]
    if params.year is not None:
        arrays.append(("year", params.year.matrix))
    arrays += [
        ("rec_w", params.rec_w),
        ("rec_b", params.rec_b),
        ("proj_w", params.proj_w),
        ("proj_b", params.proj_b),
    ]
    header = {
        "config": params.config.to_dict(),
        # reserved PAD/UNK rows are re-added by Vocabulary on load
        "vocab": vocab.id_to_word[2:],
        "tags": list(tagset.id_to_tag),
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in arrays],
    }
    if params.year is not None:
        header["year_min"] = params.year.year_min
        header["year_max"] = params.year.year_max
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> tuple[TaggerParams, Vocabulary, TagSet]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    with path.open("rb") as fh:
        magic = fh.read(len(_CKPT_MAGIC))
        if magic != _CKPT_MAGIC:
            raise DataError(f"{path} is not a chronotag checkpoint")
        (blob_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        buffers = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(8 * count)
            if len(raw) != 8 * count:
                raise DataError(f"{path} is truncated")
            buffers[spec["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    config = ModelConfig.from_dict(header["config"])
    vocab = Vocabulary(header["vocab"])
    tagset = TagSet(header["tags"])
    year = None
    if config.use_year:
        year = YearTable(
            year_min=header["year_min"],
            year_max=header["year_max"],
            matrix=buffers["year"],
        )
    params = TaggerParams(
        config=config,
        word=WordTable(matrix=buffers["word"]),
        year=year,
        rec_w=buffers["rec_w"],
        rec_b=buffers["rec_b"],
        proj_w=buffers["proj_w"],
        proj_b=buffers["proj_b"],
    )
    return params, vocab, tagset
