"""Tagger models: LSTM and feedforward variants, each with or without a
year-embedding input, plus exact gradients via backpropagation (through
time for the LSTM) and a finite-difference gradient checker.

Architecture
------------
The input for token ``i`` of a sentence written in year ``y`` is the
concatenation of the token's static word vector and (when enabled) the
trainable embedding of ``y``; the same year row feeds every timestep.
The recurrent block is a standard single-layer LSTM cell::

    a = W @ [x_t ; h_{t-1}] + b          gates stacked as [i; f; g; o]
    i, f, o = sigmoid(a_i), sigmoid(a_f), sigmoid(a_o)
    g = tanh(a_g)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

with h_0 = c_0 = 0. The feedforward variant replaces the cell by a dense
tanh layer applied to each token independently, so no information flows
between positions. Tag scores come from an affine projection of the
hidden state, turned into log-probabilities by a stable softmax.

Word embeddings are static: no gradient is ever computed for them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import WordTable, YearTable
from .mathcore import Rng, log_softmax, sigmoid, tanh, xavier_init

LSTM = "lstm"
FEEDFORWARD = "feedforward"

GATE_ORDER = ("input", "forget", "candidate", "output")


@dataclass
class ModelConfig:
    architecture: str = LSTM
    use_year: bool = True
    d_w: int = 300
    d_y: int = 300
    hidden: int = 512
    tag_count: int = 2
    max_len: int = 50

    def __post_init__(self):
        if self.architecture not in (LSTM, FEEDFORWARD):
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")
        if self.tag_count < 2:
            raise ValueError(f"tag_count must be >= 2, got {self.tag_count}")

    @property
    def input_width(self) -> int:
        return self.d_w + (self.d_y if self.use_year else 0)

    def to_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "use_year": self.use_year,
            "d_w": self.d_w,
            "d_y": self.d_y,
            "hidden": self.hidden,
            "tag_count": self.tag_count,
            "max_len": self.max_len,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class TaggerParams:
    """All parameters of one tagger variant.

    ``rec_w``/``rec_b`` are the LSTM gate weights ``(4*hidden, input+hidden)``
    or the dense feedforward weights ``(hidden, input)``. The word table is
    a static reference; the year table is None when year input is disabled.
    """

    config: ModelConfig
    word: WordTable
    year: YearTable | None
    rec_w: np.ndarray
    rec_b: np.ndarray
    proj_w: np.ndarray
    proj_b: np.ndarray

    def trainable_arrays(self) -> list[tuple[str, np.ndarray]]:
        groups = [
            ("rec_w", self.rec_w),
            ("rec_b", self.rec_b),
            ("proj_w", self.proj_w),
            ("proj_b", self.proj_b),
        ]
        if self.config.use_year:
            groups.append(("year", self.year.matrix))
        return groups


@dataclass
class GradientSet:
    """Gradients mirroring the trainable groups of :class:`TaggerParams`.

    ``year`` is a full table-shaped buffer (rows of untouched years stay
    zero) or None for models without year input. Word-table gradients are
    absent by construction.
    """

    rec_w: np.ndarray
    rec_b: np.ndarray
    proj_w: np.ndarray
    proj_b: np.ndarray
    year: np.ndarray | None = None

    def named(self) -> list[tuple[str, np.ndarray]]:
        groups = [
            ("rec_w", self.rec_w),
            ("rec_b", self.rec_b),
            ("proj_w", self.proj_w),
            ("proj_b", self.proj_b),
        ]
        if self.year is not None:
            groups.append(("year", self.year))
        return groups


@dataclass
class ForwardTrace:
    """Per-timestep activations cached by the forward pass for backprop."""

    x: np.ndarray  # (B, T, input_width)
    h: np.ndarray  # (B, T, hidden)
    probs: np.ndarray  # (B, T, tag_count)
    year_idx: np.ndarray | None  # (B,) row indices into the year table
    # LSTM-only caches
    gate_i: np.ndarray | None = None
    gate_f: np.ndarray | None = None
    gate_g: np.ndarray | None = None
    gate_o: np.ndarray | None = None
    c: np.ndarray | None = None
    tanh_c: np.ndarray | None = None


def init_params(
    config: ModelConfig,
    word_table: WordTable,
    year_table: YearTable | None,
    rng: Rng,
) -> TaggerParams:
    """Glorot-initialized parameters; the LSTM forget-gate bias starts at 1."""
    if word_table.dim != config.d_w:
        raise ValueError(f"word table dim {word_table.dim} != d_w {config.d_w}")
    if config.use_year:
        if year_table is None:
            raise ValueError("use_year=True requires a year table")
        if year_table.dim != config.d_y:
            raise ValueError(f"year table dim {year_table.dim} != d_y {config.d_y}")
    hid, d_in = config.hidden, config.input_width
    if config.architecture == LSTM:
        rec_w = xavier_init(4 * hid, d_in + hid, rng.fork("rec_w"))
        rec_b = np.zeros(4 * hid)
        rec_b[hid : 2 * hid] = 1.0  # forget gate open at init
    else:
        rec_w = xavier_init(hid, d_in, rng.fork("rec_w"))
        rec_b = np.zeros(hid)
    return TaggerParams(
        config=config,
        word=word_table,
        year=year_table if config.use_year else None,
        rec_w=rec_w,
        rec_b=rec_b,
        proj_w=xavier_init(config.tag_count, hid, rng.fork("proj_w")),
        proj_b=np.zeros(config.tag_count),
    )


def lstm_step(
    params: TaggerParams, x: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray, dict]:
    """One LSTM cell step on a single input vector.

    Returns the new hidden and cell states plus the gate activations used
    by the step (as a dict keyed like :data:`GATE_ORDER`).
    """
    hid = params.config.hidden
    if x.shape[-1] != params.config.input_width:
        raise ValueError(
            f"input width {x.shape[-1]} != configured {params.config.input_width}"
        )
    if h_prev.shape[-1] != hid or c_prev.shape[-1] != hid:
        raise ValueError("state width does not match hidden size")
    z = np.concatenate([x, h_prev], axis=-1)
    a = z @ params.rec_w.T + params.rec_b
    i = sigmoid(a[..., :hid])
    f = sigmoid(a[..., hid : 2 * hid])
    g = tanh(a[..., 2 * hid : 3 * hid])
    o = sigmoid(a[..., 3 * hid :])
    c = f * c_prev + i * g
    h = o * tanh(c)
    return h, c, {"input": i, "forget": f, "candidate": g, "output": o}


def _embed_batch(params: TaggerParams, token_ids: np.ndarray, years: np.ndarray):
    """Look up word rows and append the broadcast year row when enabled."""
    config = params.config
    token_ids = np.asarray(token_ids)
    B, T = token_ids.shape
    if T == 0:
        raise ValueError("empty sentence batch")
    if token_ids.min() < 0 or token_ids.max() >= params.word.matrix.shape[0]:
        raise ValueError("token id outside the word table")
    x = params.word.matrix[token_ids]
    year_idx = None
    if config.use_year:
        years = np.asarray(years)
        if years.shape != (B,):
            raise ValueError(f"years must have shape ({B},), got {years.shape}")
        lo, hi = params.year.year_min, params.year.year_max
        if years.min() < lo or years.max() > hi:
            raise ValueError(f"year outside table range {lo}-{hi}")
        year_idx = years - lo
        yemb = params.year.matrix[year_idx]  # (B, d_y)
        x = np.concatenate([x, np.broadcast_to(yemb[:, None, :], (B, T, config.d_y))], axis=2)
    return x, year_idx


def forward_batch(
    params: TaggerParams,
    token_ids: np.ndarray,
    years: np.ndarray,
    need_trace: bool = True,
) -> tuple[np.ndarray, ForwardTrace | None]:
    """Log-probabilities over tags for a padded batch.

    ``token_ids`` is (B, T); ``years`` is (B,) and ignored by no-year
    models. Returns ``(log_probs, trace)`` with log_probs of shape
    (B, T, tag_count). Padded positions are computed like any other
    token; masking happens in the loss.
    """
    config = params.config
    x, year_idx = _embed_batch(params, token_ids, years)
    B, T, _ = x.shape
    hid = config.hidden

    if config.architecture == FEEDFORWARD:
        h = np.tanh(x @ params.rec_w.T + params.rec_b)
    else:
        h = np.empty((B, T, hid))
        gi = np.empty((B, T, hid))
        gf = np.empty((B, T, hid))
        gg = np.empty((B, T, hid))
        go = np.empty((B, T, hid))
        cs = np.empty((B, T, hid))
        h_t = np.zeros((B, hid))
        c_t = np.zeros((B, hid))
        for t in range(T):
            z = np.concatenate([x[:, t], h_t], axis=1)
            a = z @ params.rec_w.T + params.rec_b
            i = sigmoid(a[:, :hid])
            f = sigmoid(a[:, hid : 2 * hid])
            g = tanh(a[:, 2 * hid : 3 * hid])
            o = sigmoid(a[:, 3 * hid :])
            c_t = f * c_t + i * g
            h_t = o * np.tanh(c_t)
            gi[:, t], gf[:, t], gg[:, t], go[:, t] = i, f, g, o
            cs[:, t], h[:, t] = c_t, h_t

    logits = h @ params.proj_w.T + params.proj_b
    log_probs = log_softmax(logits)
    if not need_trace:
        return log_probs, None
    trace = ForwardTrace(
        x=x,
        h=h,
        probs=np.exp(log_probs),
        year_idx=year_idx,
    )
    if config.architecture == LSTM:
        trace.gate_i, trace.gate_f, trace.gate_g, trace.gate_o = gi, gf, gg, go
        trace.c = cs
        trace.tanh_c = np.tanh(cs)
    return log_probs, trace


def forward(
    params: TaggerParams, token_ids, year: int, need_trace: bool = False
) -> tuple[np.ndarray, ForwardTrace | None]:
    """Single-sentence forward pass; returns (T, tag_count) log-probs."""
    token_ids = np.asarray(token_ids).reshape(1, -1)
    if token_ids.shape[1] > params.config.max_len:
        raise ValueError(
            f"sentence length {token_ids.shape[1]} exceeds max_len {params.config.max_len}"
        )
    log_probs, trace = forward_batch(
        params, token_ids, np.array([year]), need_trace=need_trace
    )
    return log_probs[0], trace


def loss(log_probs: np.ndarray, gold: np.ndarray, mask: np.ndarray) -> float:
    """Mean negative log-likelihood of the gold tags over unmasked positions.

    Positions with a negative gold id (tags unseen in training) contribute
    nothing, like masked positions. All positions masked is an error.
    """
    log_probs = np.asarray(log_probs)
    gold = np.asarray(gold)
    mask = np.asarray(mask, dtype=bool)
    if gold.shape != mask.shape or log_probs.shape[:-1] != gold.shape:
        raise ValueError("log_probs/gold/mask shapes disagree")
    eff = mask & (gold >= 0)
    m = int(eff.sum())
    if m == 0:
        raise ValueError("no unmasked positions to score")
    picked = np.take_along_axis(
        log_probs, np.clip(gold, 0, None)[..., None], axis=-1
    )[..., 0]
    return float(-(picked * eff).sum() / m)


def backward_batch(
    trace: ForwardTrace,
    params: TaggerParams,
    gold: np.ndarray,
    mask: np.ndarray,
) -> GradientSet:
    """Exact gradients of :func:`loss` for every trainable group.

    The year-table gradient accumulates one contribution per timestep of
    each sentence, since the same year row feeds every step.
    """
    config = params.config
    B, T, _ = trace.x.shape
    gold = np.asarray(gold)
    mask = np.asarray(mask, dtype=bool)
    if gold.shape != (B, T):
        raise ValueError(f"gold shape {gold.shape} does not match trace ({B}, {T})")
    eff = mask & (gold >= 0)
    m = int(eff.sum())
    if m == 0:
        raise ValueError("no unmasked positions to score")

    # d loss / d logits = (softmax - onehot) / m on unmasked positions
    dlogits = trace.probs.copy()
    b_idx, t_idx = np.nonzero(eff)
    dlogits[b_idx, t_idx, gold[b_idx, t_idx]] -= 1.0
    dlogits *= eff[..., None] / m

    dproj_w = np.einsum("btk,bth->kh", dlogits, trace.h)
    dproj_b = dlogits.sum(axis=(0, 1))
    dh_all = dlogits @ params.proj_w  # (B, T, hidden)

    d_in = config.input_width
    if config.architecture == FEEDFORWARD:
        du = dh_all * (1.0 - trace.h**2)
        drec_w = np.einsum("bth,btd->hd", du, trace.x)
        drec_b = du.sum(axis=(0, 1))
        dx = du @ params.rec_w
    else:
        hid = config.hidden
        drec_w = np.zeros_like(params.rec_w)
        drec_b = np.zeros_like(params.rec_b)
        dx = np.empty((B, T, d_in))
        dh_next = np.zeros((B, hid))
        dc_next = np.zeros((B, hid))
        zeros = np.zeros((B, hid))
        for t in range(T - 1, -1, -1):
            i, f = trace.gate_i[:, t], trace.gate_f[:, t]
            g, o = trace.gate_g[:, t], trace.gate_o[:, t]
            tc = trace.tanh_c[:, t]
            c_prev = trace.c[:, t - 1] if t > 0 else zeros
            h_prev = trace.h[:, t - 1] if t > 0 else zeros
            dh = dh_all[:, t] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1.0 - tc**2)
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            da = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    dg * (1.0 - g**2),
                    do * o * (1.0 - o),
                ],
                axis=1,
            )
            z = np.concatenate([trace.x[:, t], h_prev], axis=1)
            drec_w += da.T @ z
            drec_b += da.sum(axis=0)
            dz = da @ params.rec_w
            dx[:, t] = dz[:, :d_in]
            dh_next = dz[:, d_in:]

    dyear = None
    if config.use_year:
        if trace.year_idx is None:
            raise ValueError("trace has no year indices but use_year is set")
        dyear = np.zeros_like(params.year.matrix)
        per_sentence = dx[:, :, config.d_w :].sum(axis=1)  # (B, d_y)
        np.add.at(dyear, trace.year_idx, per_sentence)

    return GradientSet(
        rec_w=drec_w, rec_b=drec_b, proj_w=dproj_w, proj_b=dproj_b, year=dyear
    )


# ---------------------------------------------------------------------------
# Gradient checking


@dataclass
class GradCheckReport:
    """Per-group worst-case relative error between analytic and numeric grads."""

    max_rel_err: dict[str, float]
    worst_coord: dict[str, tuple]
    threshold: float = 1e-4

    @property
    def passed(self) -> bool:
        return all(e < self.threshold for e in self.max_rel_err.values())

    def lines(self) -> list[str]:
        out = []
        for name, err in self.max_rel_err.items():
            mark = "ok" if err < self.threshold else "FAIL"
            out.append(f"{name:8s} max_rel_err={err:.3e} at {self.worst_coord[name]} [{mark}]")
        return out


def relative_errors(
    analytic: GradientSet, numeric: GradientSet, floor: float = 1e-6
) -> GradCheckReport:
    """Elementwise |a - n| / max(|a|, |n|, floor), reduced to per-group max.

    The floor keeps finite-difference noise on near-zero coordinates from
    registering as error; a sign-flipped gradient scores about 2.
    """
    errs: dict[str, float] = {}
    coords: dict[str, tuple] = {}
    numeric_map = dict(numeric.named())
    for name, a in analytic.named():
        n = numeric_map[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        rel = np.abs(a - n) / denom
        flat = int(np.argmax(rel))
        errs[name] = float(rel.flat[flat])
        coords[name] = tuple(int(v) for v in np.unravel_index(flat, rel.shape))
    return GradCheckReport(max_rel_err=errs, worst_coord=coords)


def _toy_setup(config: ModelConfig, seed: int, batch: int = 2, length: int = 6):
    """Small random params and batch for gradient checking."""
    rng = Rng(seed)
    vocab_rows = 12
    word = WordTable(matrix=rng.fork("words").normal(0.0, 0.5, size=(vocab_rows, config.d_w)))
    year_table = None
    if config.use_year:
        year_table = YearTable(
            year_min=1900,
            year_max=1909,
            matrix=xavier_init(10, config.d_y, rng.fork("years")),
        )
    params = init_params(config, word, year_table, rng.fork("params"))
    tok_rng = rng.fork("tokens")
    token_ids = np.array(
        [[tok_rng.randint(vocab_rows) for _ in range(length)] for _ in range(batch)]
    )
    gold = np.array(
        [[tok_rng.randint(config.tag_count) for _ in range(length)] for _ in range(batch)]
    )
    years = np.array([1900 + tok_rng.randint(10) for _ in range(batch)])
    mask = np.ones((batch, length), dtype=bool)
    mask[-1, -1] = False  # exercise masking
    return params, token_ids, years, gold, mask


def numeric_gradients(
    params: TaggerParams,
    token_ids: np.ndarray,
    years: np.ndarray,
    gold: np.ndarray,
    mask: np.ndarray,
    h: float = 1e-5,
) -> GradientSet:
    """Central finite differences over every trainable coordinate."""

    def eval_loss() -> float:
        log_probs, _ = forward_batch(params, token_ids, years, need_trace=False)
        return loss(log_probs, gold, mask)

    buffers: dict[str, np.ndarray] = {}
    for name, arr in params.trainable_arrays():
        grad = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            up = eval_loss()
            flat[j] = orig - h
            down = eval_loss()
            flat[j] = orig
            gflat[j] = (up - down) / (2.0 * h)
        buffers[name] = grad
    return GradientSet(
        rec_w=buffers["rec_w"],
        rec_b=buffers["rec_b"],
        proj_w=buffers["proj_w"],
        proj_b=buffers["proj_b"],
        year=buffers.get("year"),
    )


def grad_check(config: ModelConfig, seed: int, h: float = 1e-5) -> GradCheckReport:
    """Compare analytic gradients against central differences on a tiny model."""
    params, token_ids, years, gold, mask = _toy_setup(config, seed)
    n_params = sum(arr.size for _, arr in params.trainable_arrays())
    if n_params > 20000:
        raise ValueError(f"config too large for gradient checking ({n_params} params)")
    log_probs, trace = forward_batch(params, token_ids, years)
    analytic = backward_batch(trace, params, gold, mask)
    numeric = numeric_gradients(params, token_ids, years, gold, mask, h=h)
    return relative_errors(analytic, numeric)
