"""Post-training analysis: PCA of year embeddings with time regression,
tag-sequence perplexity, candidate-year sweeps, LOWESS smoothing, dating
predictions, and bucket error metrics.

Perplexity here is over the gold tag sequence: exp of the mean negative
log-probability the tagger assigns to the gold tags when told the sentence
was written in a candidate year. Sweeping the candidate year and taking
the smoothed curve's argmin dates a bucket of sentences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import DatedSentence, TagSet, Vocabulary
from .errors import NumericalError
from .mathcore import Rng
from .model import TaggerParams, forward_batch
from .training import make_batches

DECADE = "decade"
YEAR = "year"

POWER_ITER_TOL = 1e-10
POWER_ITER_MAX = 10000


@dataclass
class EmbeddingProjection:
    """First-principal-component scores of per-year embeddings, with an
    ordinary-least-squares regression of score on year."""

    years: np.ndarray
    scores: np.ndarray
    explained_variance_ratio: float
    slope: float
    intercept: float
    r_squared: float


@dataclass
class PerplexityCurve:
    label: str
    years: np.ndarray
    raw: np.ndarray
    smoothed: np.ndarray
    predicted_year: int


@dataclass
class BucketResult:
    label: int
    center: int
    predicted: int

    @property
    def abs_error(self) -> int:
        return abs(self.predicted - self.center)


@dataclass
class DatingReport:
    kind: str
    buckets: list[BucketResult]
    mean_abs_error: float
    baseline_year: int
    baseline_error: float


def pca_first_component(embeddings: np.ndarray, years: np.ndarray) -> EmbeddingProjection:
    """Project mean-centered rows onto their dominant covariance eigenvector.

    The eigenvector comes from power iteration (tolerance 1e-10, at most
    10000 iterations) on the 1/(n-1)-normalized covariance; its sign is
    fixed so the regression slope of score on year is non-negative.
    """
    X = np.asarray(embeddings, dtype=np.float64)
    years = np.asarray(years, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise ValueError(f"need a (years >= 2) x (dims >= 1) matrix, got {X.shape}")
    if years.shape != (X.shape[0],):
        raise ValueError("one year per embedding row required")
    centered = X - X.mean(axis=0)
    total_var = float((centered**2).sum()) / (X.shape[0] - 1)
    if total_var == 0.0:
        raise NumericalError("embeddings have zero variance; PCA is undefined")
    cov = centered.T @ centered / (X.shape[0] - 1)

    v = Rng(0x9C0FFEE).normal(size=cov.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(POWER_ITER_MAX):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            raise NumericalError("power iteration hit the null space")
        w /= norm
        if np.linalg.norm(w - v) < POWER_ITER_TOL:
            v = w
            break
        v = w

    lead_var = float(v @ cov @ v)
    scores = centered @ v
    slope, intercept, r2 = _ols(years, scores)
    if slope < 0:
        v, scores, slope = -v, -scores, -slope
        intercept = -intercept
    return EmbeddingProjection(
        years=years.astype(int),
        scores=scores,
        explained_variance_ratio=lead_var / total_var,
        slope=slope,
        intercept=intercept,
        r_squared=r2,
    )


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    x_var = float(((x - x.mean()) ** 2).sum())
    if x_var == 0.0:
        raise ValueError("regressor has zero variance")
    slope = float(((x - x.mean()) * (y - y.mean())).sum()) / x_var
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (slope * x + intercept)
    y_var = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / y_var if y_var > 0 else 0.0
    return slope, intercept, r2


# ---------------------------------------------------------------------------
# Perplexity


def _encode_bucket(
    params: TaggerParams,
    sentences: list[DatedSentence],
    vocab: Vocabulary,
    tagset: TagSet,
):
    (batch,) = make_batches(
        sentences, vocab, tagset, len(sentences), params.config.max_len
    )
    return batch


def _per_sentence_perplexity(
    params: TaggerParams, batch, candidate_year: int
) -> np.ndarray:
    years = np.full(batch.years.shape, candidate_year, dtype=np.int32)
    log_probs, _ = forward_batch(params, batch.token_ids, years, need_trace=False)
    eff = batch.mask & (batch.tag_ids >= 0)
    picked = np.take_along_axis(
        log_probs, np.clip(batch.tag_ids, 0, None)[..., None], axis=-1
    )[..., 0]
    counts = eff.sum(axis=1)
    if (counts == 0).any():
        raise ValueError("a sentence has no scoreable tokens")
    nll = -(picked * eff).sum(axis=1) / counts
    return np.exp(nll)


def sentence_perplexity(
    params: TaggerParams,
    sentence: DatedSentence,
    year: int,
    vocab: Vocabulary,
    tagset: TagSet,
) -> float:
    """exp(mean over real tokens of -ln p(gold tag)), at a hypothesized year.

    Tokens whose gold tag was unseen in training are skipped; the skip is
    identical at every candidate year, so sweeps are unaffected.
    """
    batch = _encode_bucket(params, [sentence], vocab, tagset)
    return float(_per_sentence_perplexity(params, batch, year)[0])


def perplexity_sweep(
    params: TaggerParams,
    sentences: list[DatedSentence],
    vocab: Vocabulary,
    tagset: TagSet,
    year_min: int,
    year_max: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Mean sentence perplexity of a bucket at every candidate year.

    Returns ``(years, mean_perplexities)`` with one point per year in
    ``[year_min, year_max]``.
    """
    if not sentences:
        raise ValueError("empty bucket")
    batch = _encode_bucket(params, sentences, vocab, tagset)
    years = np.arange(year_min, year_max + 1)
    curve = np.empty(years.shape[0])
    for j, y in enumerate(years):
        curve[j] = float(_per_sentence_perplexity(params, batch, int(y)).mean())
    return years, curve


# ---------------------------------------------------------------------------
# LOWESS


def lowess(
    x: np.ndarray, y: np.ndarray, frac: float = 0.25, iters: int = 2
) -> np.ndarray:
    """Cleveland's locally weighted scatterplot smoother.

    For each x_i, fits a weighted linear regression over the
    ceil(frac * n) nearest points with tricube weights scaled by the
    neighborhood radius, then applies ``iters`` robustifying passes that
    downweight large residuals with bisquare weights. Returns the smoothed
    value at each input x.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be equal-length vectors")
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points")
    if np.unique(x).size < 2:
        raise NumericalError("all x values identical; smoothing is undefined")
    if not 0.0 < frac <= 1.0:
        raise ValueError(f"frac must be in (0, 1], got {frac}")
    if iters < 0:
        raise ValueError(f"iters must be >= 0, got {iters}")

    k = min(int(math.ceil(frac * n)), n)
    dist = np.abs(x[:, None] - x[None, :])
    radius = np.sort(dist, axis=1)[:, k - 1]  # (n,) distance to k-th nearest
    with np.errstate(divide="ignore", invalid="ignore"):
        u = dist / radius[:, None]
    w = np.clip(1.0 - u**3, 0.0, None) ** 3
    zero_radius = radius == 0.0
    if zero_radius.any():
        # duplicates filled the whole neighborhood; weight exact matches only
        w[zero_radius] = (dist[zero_radius] == 0.0).astype(np.float64)

    t = x[None, :] - x[:, None]  # per-row centered abscissa
    delta = np.ones(n)
    yhat = y.copy()
    for _ in range(iters + 1):
        wd = w * delta[None, :]
        s0 = wd.sum(axis=1)
        s1 = (wd * t).sum(axis=1)
        s2 = (wd * t * t).sum(axis=1)
        b0 = wd @ y
        b1 = (wd * t) @ y
        det = s0 * s2 - s1 * s1
        with np.errstate(divide="ignore", invalid="ignore"):
            linear = (s2 * b0 - s1 * b1) / det
            local_mean = b0 / s0
        use_line = det > 1e-12 * np.maximum(s0 * s2, 1e-300)
        yhat = np.where(use_line, linear, np.where(s0 > 0, local_mean, y))
        resid = y - yhat
        scale = float(np.median(np.abs(resid)))
        if scale <= 1e-300:
            break
        delta = np.clip(resid / (6.0 * scale), -1.0, 1.0)
        delta = (1.0 - delta**2) ** 2
    return yhat


def make_curve(
    label,
    years: np.ndarray,
    raw: np.ndarray,
    frac: float = 0.25,
    iters: int = 2,
) -> PerplexityCurve:
    """Smooth a raw sweep and take the argmin year (ties: earliest)."""
    smoothed = lowess(years.astype(np.float64), raw, frac=frac, iters=iters)
    return PerplexityCurve(
        label=str(label),
        years=years,
        raw=raw,
        smoothed=smoothed,
        predicted_year=predict_year(years, smoothed),
    )


def predict_year(years: np.ndarray, smoothed: np.ndarray) -> int:
    """Year minimizing the smoothed curve; ties break to the earliest year."""
    return int(years[int(np.argmin(smoothed))])


# ---------------------------------------------------------------------------
# Dating metrics


def bucket_sentences(
    sentences: list[DatedSentence], kind: str
) -> dict[int, list[DatedSentence]]:
    if kind not in (DECADE, YEAR):
        raise ValueError(f"bucket kind must be {DECADE!r} or {YEAR!r}")
    buckets: dict[int, list[DatedSentence]] = {}
    for sent in sentences:
        key = sent.decade() if kind == DECADE else sent.year
        buckets.setdefault(key, []).append(sent)
    return buckets


def bucket_center(label: int, kind: str) -> int:
    """Middle year of a decade bucket (start + 5); the year itself otherwise."""
    return label + 5 if kind == DECADE else label


def default_baseline_year(year_min: int, year_max: int) -> int:
    return (year_min + year_max + 1) // 2


def dating_metric(
    predictions: dict[int, int],
    kind: str,
    year_min: int,
    year_max: int,
    baseline_year: int | None = None,
) -> DatingReport:
    """Mean absolute distance between predicted years and bucket centers.

    The baseline is the same metric for a constant prediction at the
    middle year of the configured range (1910 for 1810-2009).
    """
    if not predictions:
        raise ValueError("no bucket predictions")
    if baseline_year is None:
        baseline_year = default_baseline_year(year_min, year_max)
    buckets = [
        BucketResult(label=label, center=bucket_center(label, kind), predicted=pred)
        for label, pred in sorted(predictions.items())
    ]
    mean_err = float(np.mean([b.abs_error for b in buckets]))
    baseline = float(np.mean([abs(baseline_year - b.center) for b in buckets]))
    return DatingReport(
        kind=kind,
        buckets=buckets,
        mean_abs_error=mean_err,
        baseline_year=baseline_year,
        baseline_error=baseline,
    )


def date_buckets(
    params: TaggerParams,
    sentences: list[DatedSentence],
    vocab: Vocabulary,
    tagset: TagSet,
    kind: str,
    year_min: int,
    year_max: int,
    frac: float = 0.25,
    iters: int = 2,
    threads: int = 1,
) -> tuple[list[PerplexityCurve], DatingReport]:
    """Sweep, smooth, and date every bucket; returns curves plus the report.

    Buckets are independent, so with ``threads > 1`` their sweeps run on a
    thread pool; results are assembled in sorted bucket order either way.
    """
    buckets = sorted(bucket_sentences(sentences, kind).items())

    def sweep(item):
        label, group = item
        return perplexity_sweep(params, group, vocab, tagset, year_min, year_max)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            sweeps = list(pool.map(sweep, buckets))
    else:
        sweeps = [sweep(item) for item in buckets]

    curves = []
    predictions: dict[int, int] = {}
    for (label, _), (years, raw) in zip(buckets, sweeps):
        curve = make_curve(label, years, raw, frac=frac, iters=iters)
        curves.append(curve)
        predictions[label] = curve.predicted_year
    report = dating_metric(predictions, kind, year_min, year_max)
    return curves, report


# ---------------------------------------------------------------------------
# Per-sentence model comparison


@dataclass
class SentenceDating:
    sentence: DatedSentence
    lstm_predicted: int
    lstm_error: int
    ff_predicted: int
    ff_error: int


def _per_sentence_curves(
    params: TaggerParams,
    sentences: list[DatedSentence],
    vocab: Vocabulary,
    tagset: TagSet,
    year_min: int,
    year_max: int,
) -> np.ndarray:
    """Perplexity of each sentence at each candidate year, (n, years)."""
    batch = _encode_bucket(params, sentences, vocab, tagset)
    years = np.arange(year_min, year_max + 1)
    out = np.empty((len(sentences), years.shape[0]))
    for j, y in enumerate(years):
        out[:, j] = _per_sentence_perplexity(params, batch, int(y))
    return out


def per_sentence_error_report(
    lstm_params: TaggerParams,
    ff_params: TaggerParams,
    sentences: list[DatedSentence],
    vocab: Vocabulary,
    tagset: TagSet,
    year_min: int,
    year_max: int,
    top_k: int = 10,
    min_len: int = 6,
    frac: float = 0.25,
    iters: int = 2,
) -> list[SentenceDating]:
    """Date each sentence with both models and rank by the LSTM's error.

    Sentences shorter than ``min_len`` tokens are excluded. Each sentence
    is dated from its own sweep: LOWESS over the per-year perplexities,
    then the argmin year. Results are sorted ascending by LSTM error and
    truncated to ``top_k``.
    """
    eligible = [s for s in sentences if len(s.tokens) >= min_len]
    if not eligible:
        return []
    years = np.arange(year_min, year_max + 1).astype(np.float64)
    lstm_ppl = _per_sentence_curves(
        lstm_params, eligible, vocab, tagset, year_min, year_max
    )
    ff_ppl = _per_sentence_curves(
        ff_params, eligible, vocab, tagset, year_min, year_max
    )
    records = []
    for i, sent in enumerate(eligible):
        lstm_pred = predict_year(years, lowess(years, lstm_ppl[i], frac, iters))
        ff_pred = predict_year(years, lowess(years, ff_ppl[i], frac, iters))
        records.append(
            SentenceDating(
                sentence=sent,
                lstm_predicted=lstm_pred,
                lstm_error=abs(lstm_pred - sent.year),
                ff_predicted=ff_pred,
                ff_error=abs(ff_pred - sent.year),
            )
        )
    records.sort(key=lambda r: r.lstm_error)
    return records[:top_k]
