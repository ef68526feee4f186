"""Command-line pipeline: synth, train, ablate, pca, date, grad-check, eval.

Configuration precedence is CLI flags > JSON config file (--config) >
built-in defaults. The seed falls back to the CHRONOTAG_SEED environment
variable when not given. Every run writes a manifest (resolved config,
seed, input/output paths, artifact hashes, wall time) atomically at the
end, sufficient to reproduce the run.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, synthgen
from .corpus import (
    DEFAULT_YEAR_MAX,
    DEFAULT_YEAR_MIN,
    build_tagset,
    build_vocab,
    load_corpus,
    save_corpus,
    split,
    truncate,
)
from .embeddings import init_year_table, load_word_table
from .errors import DataError, NumericalError
from .mathcore import Rng
from .model import FEEDFORWARD, LSTM, ModelConfig, grad_check, init_params
from .svgplot import Plot
from .training import (
    TrainConfig,
    evaluate_accuracy,
    load_checkpoint,
    save_checkpoint,
    train,
)

_ENV_SEED = "CHRONOTAG_SEED"


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json_atomic(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")
    tmp.replace(path)


def _write_manifest(
    directory: Path,
    subcommand: str,
    config: dict,
    inputs: list[Path],
    outputs: list[Path],
    started: float,
) -> Path:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs if Path(p).exists()},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs if Path(p).exists()},
        "wall_time_s": time.monotonic() - started,
    }
    path = directory / "manifest.json"
    _write_json_atomic(path, manifest)
    return path


class _Settings:
    """Flag/file/default resolution for one subcommand invocation."""

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file: dict = {}
        cfg_path = self._args.get("config")
        if cfg_path:
            path = Path(cfg_path)
            if not path.exists():
                raise DataError(f"config file not found: {path}")
            self._file = json.loads(path.read_text("utf-8"))
        self.resolved: dict = {}

    def get(self, key: str, default):
        value = self._args.get(key)
        if value is None:
            value = self._file.get(key, default)
        self.resolved[key] = value
        return value

    def seed(self) -> int:
        value = self._args.get("seed")
        if value is None:
            value = self._file.get("seed")
        if value is None:
            value = os.environ.get(_ENV_SEED)
        value = 0 if value is None else int(value)
        self.resolved["seed"] = value
        return value


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_cell(v) for v in row) + "\n")


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    started = time.monotonic()
    settings = _Settings(args)
    config = synthgen.SynthConfig(
        year_min=int(settings.get("year_min", DEFAULT_YEAR_MIN)),
        year_max=int(settings.get("year_max", DEFAULT_YEAR_MAX)),
        per_decade=int(settings.get("per_decade", 500)),
        mode=settings.get("mode", synthgen.MIXED),
        slope=float(settings.get("slope", 30.0)),
        seed=settings.seed(),
    )
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    sentences = synthgen.generate(config)
    save_corpus(out, sentences)
    print(f"wrote {len(sentences)} sentences to {out}")
    _write_manifest(
        out.parent, "synth", config.to_dict(), inputs=[], outputs=[out], started=started
    )
    return 0


# ---------------------------------------------------------------------------
# train / ablate


def _prepare_data(settings: _Settings, corpus_path: str, seed: int, max_len: int):
    sentences = load_corpus(
        corpus_path,
        int(settings.get("year_min", DEFAULT_YEAR_MIN)),
        int(settings.get("year_max", DEFAULT_YEAR_MAX)),
    )
    if not sentences:
        raise DataError(f"corpus {corpus_path} is empty")
    sentences = truncate(sentences, max_len)
    fraction = float(settings.get("split_fraction", 0.9))
    data = split(sentences, fraction, Rng(seed).fork("split"))
    vocab = build_vocab(data.train, int(settings.get("vocab_size", 600_000)))
    tagset = build_tagset(data.train)
    return data, vocab, tagset


def _build_params(settings: _Settings, arch, use_year, vocab, tagset, seed):
    rng = Rng(seed)
    d_w = int(settings.get("d_w", 300))
    d_y = int(settings.get("d_y", 300))
    config = ModelConfig(
        architecture=arch,
        use_year=use_year,
        d_w=d_w,
        d_y=d_y,
        hidden=int(settings.get("hidden", 512)),
        tag_count=len(tagset),
        max_len=int(settings.get("max_len", 50)),
    )
    word_table = load_word_table(
        settings.get("embeddings", None), vocab, d_w, rng.fork("word-table")
    )
    year_table = None
    if use_year:
        year_table = init_year_table(
            int(settings.get("year_min", DEFAULT_YEAR_MIN)),
            int(settings.get("year_max", DEFAULT_YEAR_MAX)),
            d_y,
            rng.fork("year-table"),
        )
    return init_params(config, word_table, year_table, rng.fork("params"))


def _train_config(settings: _Settings, seed: int) -> TrainConfig:
    clip = settings.get("grad_clip", None)
    return TrainConfig(
        batch_size=int(settings.get("batch_size", 100)),
        learning_rate=float(settings.get("lr", 0.001)),
        epochs=int(settings.get("epochs", 1)),
        seed=seed,
        shuffle=bool(settings.get("shuffle", True)),
        optimizer=settings.get("optimizer", "adam"),
        grad_clip=None if clip is None else float(clip),
    )


def _run_one_training(settings, arch, use_year, data, vocab, tagset, seed, run_dir):
    params = _build_params(settings, arch, use_year, vocab, tagset, seed)
    report = train(params, data, vocab, tagset, _train_config(settings, seed))
    run_dir.mkdir(parents=True, exist_ok=True)
    ckpt = run_dir / "model.ckpt"
    save_checkpoint(ckpt, params, vocab, tagset)
    _write_csv(
        run_dir / "progress.csv",
        ["step", "mean_loss"],
        [[s, l] for s, l in report.loss_history],
    )
    _write_json_atomic(run_dir / "report.json", report.to_dict())
    return params, report, ckpt


def cmd_train(args) -> int:
    started = time.monotonic()
    settings = _Settings(args)
    seed = settings.seed()
    run_dir = Path(args.run_dir)
    max_len = int(settings.get("max_len", 50))
    data, vocab, tagset = _prepare_data(settings, args.corpus, seed, max_len)
    arch = settings.get("arch", LSTM)
    use_year = bool(settings.get("use_year", True))
    _, report, ckpt = _run_one_training(
        settings, arch, use_year, data, vocab, tagset, seed, run_dir
    )
    test_path = run_dir / "test.jsonl"
    save_corpus(test_path, data.test)
    _write_json_atomic(run_dir / "config.json", settings.resolved)
    print(
        f"{arch} use_year={use_year}: train_acc={report.train_accuracy:.4f} "
        f"test_acc={report.test_accuracy:.4f} ({report.steps} steps, "
        f"{report.wall_time_s:.1f}s)"
    )
    _write_manifest(
        run_dir,
        "train",
        settings.resolved,
        inputs=[Path(args.corpus)],
        outputs=[ckpt, run_dir / "progress.csv", run_dir / "report.json", test_path],
        started=started,
    )
    return 0


_VARIANTS = [
    ("lstm_year", LSTM, True),
    ("lstm_noyear", LSTM, False),
    ("ff_year", FEEDFORWARD, True),
    ("ff_noyear", FEEDFORWARD, False),
]


def cmd_ablate(args) -> int:
    started = time.monotonic()
    settings = _Settings(args)
    seed = settings.seed()
    run_dir = Path(args.run_dir)
    max_len = int(settings.get("max_len", 50))
    data, vocab, tagset = _prepare_data(settings, args.corpus, seed, max_len)
    rows = []
    outputs = []
    for name, arch, use_year in _VARIANTS:
        _, report, ckpt = _run_one_training(
            settings, arch, use_year, data, vocab, tagset, seed, run_dir / name
        )
        rows.append([arch, use_year, report.train_accuracy, report.test_accuracy])
        outputs.append(ckpt)
        print(
            f"{name:12s} train_acc={report.train_accuracy:.4f} "
            f"test_acc={report.test_accuracy:.4f}"
        )
    table = run_dir / "ablation.csv"
    _write_csv(table, ["arch", "use_year", "train_accuracy", "test_accuracy"], rows)
    test_path = run_dir / "test.jsonl"
    save_corpus(test_path, data.test)
    _write_manifest(
        run_dir,
        "ablate",
        settings.resolved,
        inputs=[Path(args.corpus)],
        outputs=outputs + [table, test_path],
        started=started,
    )
    return 0


# ---------------------------------------------------------------------------
# pca


def _projection_for(ckpt_path: str) -> analysis.EmbeddingProjection:
    params, _, _ = load_checkpoint(ckpt_path)
    if params.year is None:
        raise DataError(f"model has no year table: {ckpt_path}")
    return analysis.pca_first_component(params.year.matrix, params.year.years)


def cmd_pca(args) -> int:
    started = time.monotonic()
    settings = _Settings(args)
    out_dir = Path(settings.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    proj = _projection_for(args.checkpoint)
    csv_path = out_dir / "pca.csv"
    _write_csv(
        csv_path,
        ["year", "pc1_score"],
        [[int(y), float(s)] for y, s in zip(proj.years, proj.scores)],
    )
    fit = proj.intercept + proj.slope * proj.years.astype(float)
    plot = Plot("Year embeddings: first principal component", "year", "PC1 score")
    plot.add(proj.years, proj.scores, label="PC1 score", kind="scatter")
    plot.add(proj.years, fit, label=f"OLS fit (R^2={proj.r_squared:.3f})")
    svg_path = out_dir / "pca.svg"
    plot.save(svg_path)
    print(f"R^2={proj.r_squared:.4f} explained_var={proj.explained_variance_ratio:.4f}")
    outputs = [csv_path, svg_path]
    if args.compare:
        other = _projection_for(args.compare)
        cmp_path = out_dir / "pca_compare.csv"
        _write_csv(
            cmp_path,
            ["year", "pc1_score"],
            [[int(y), float(s)] for y, s in zip(other.years, other.scores)],
        )
        outputs.append(cmp_path)
        print(f"compare R^2={other.r_squared:.4f}")
        print(f"R^2 difference={proj.r_squared - other.r_squared:.4f}")
    _write_manifest(
        out_dir,
        "pca",
        settings.resolved,
        inputs=[Path(args.checkpoint)] + ([Path(args.compare)] if args.compare else []),
        outputs=outputs,
        started=started,
    )
    return 0


# ---------------------------------------------------------------------------
# date


def cmd_date(args) -> int:
    started = time.monotonic()
    settings = _Settings(args)
    kind = settings.get("bucket", analysis.DECADE)
    if kind not in (analysis.DECADE, analysis.YEAR):
        raise ValueError(f"--bucket must be decade or year, got {kind!r}")
    year_min = int(settings.get("year_min", DEFAULT_YEAR_MIN))
    year_max = int(settings.get("year_max", DEFAULT_YEAR_MAX))

    if args.baseline:
        if kind == analysis.DECADE:
            labels = list(range((year_min // 10) * 10, (year_max // 10) * 10 + 1, 10))
        else:
            labels = list(range(year_min, year_max + 1))
        base_year = analysis.default_baseline_year(year_min, year_max)
        report = analysis.dating_metric(
            {lab: base_year for lab in labels}, kind, year_min, year_max
        )
        print(f"baseline({base_year}) {kind} metric = {report.mean_abs_error}")
        return 0

    if not args.checkpoint or not args.corpus:
        raise ValueError("date requires --ckpt and --corpus (or --baseline)")
    params, vocab, tagset = load_checkpoint(args.checkpoint)
    if params.year is not None:
        year_min = params.year.year_min
        year_max = params.year.year_max
    sentences = truncate(
        load_corpus(args.corpus, year_min, year_max), params.config.max_len
    )
    frac = float(settings.get("frac", 0.25))
    iters = int(settings.get("iters", 2))
    out_dir = Path(settings.get("out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    curves, report = analysis.date_buckets(
        params,
        sentences,
        vocab,
        tagset,
        kind,
        year_min,
        year_max,
        frac=frac,
        iters=iters,
        threads=int(settings.get("threads", 1)),
    )
    outputs = []
    for curve in curves:
        csv_path = out_dir / f"curve_{curve.label}.csv"
        _write_csv(
            csv_path,
            ["year", "raw_mean_perplexity", "lowess"],
            [
                [int(y), float(r), float(s)]
                for y, r, s in zip(curve.years, curve.raw, curve.smoothed)
            ],
        )
        plot = Plot(
            f"Perplexity sweep, bucket {curve.label} (predicted {curve.predicted_year})",
            "candidate year",
            "mean tag perplexity",
        )
        plot.add(curve.years, curve.raw, label="mean perplexity", kind="scatter")
        plot.add(curve.years, curve.smoothed, label="lowess")
        svg_path = out_dir / f"curve_{curve.label}.svg"
        plot.save(svg_path)
        outputs += [csv_path, svg_path]
    report_path = out_dir / "dating_report.csv"
    _write_csv(
        report_path,
        ["bucket", "center", "predicted", "abs_error"],
        [[b.label, b.center, b.predicted, b.abs_error] for b in report.buckets],
    )
    summary = {
        "bucket_kind": kind,
        "mean_abs_error": report.mean_abs_error,
        "baseline_year": report.baseline_year,
        "baseline_error": report.baseline_error,
    }
    _write_json_atomic(out_dir / "dating_summary.json", summary)
    outputs += [report_path, out_dir / "dating_summary.json"]
    print(
        f"{kind} buckets: mean_abs_error={report.mean_abs_error:.2f} "
        f"baseline({report.baseline_year})={report.baseline_error:.2f}"
    )
    _write_manifest(
        out_dir,
        "date",
        settings.resolved,
        inputs=[Path(args.checkpoint), Path(args.corpus)],
        outputs=outputs,
        started=started,
    )
    return 0


# ---------------------------------------------------------------------------
# grad-check / eval


def cmd_grad_check(args) -> int:
    settings = _Settings(args)
    config = ModelConfig(
        architecture=settings.get("arch", LSTM),
        use_year=bool(settings.get("use_year", True)),
        d_w=int(settings.get("d_w", 8)),
        d_y=int(settings.get("d_y", 4)),
        hidden=int(settings.get("hidden", 16)),
        tag_count=int(settings.get("tags", 5)),
        max_len=int(settings.get("max_len", 50)),
    )
    report = grad_check(config, settings.seed())
    for line in report.lines():
        print(line)
    if not report.passed:
        raise NumericalError(
            f"gradient check failed (worst {max(report.max_rel_err.values()):.3e})"
        )
    return 0


def cmd_eval(args) -> int:
    settings = _Settings(args)
    params, vocab, tagset = load_checkpoint(args.checkpoint)
    year_min = params.year.year_min if params.year else DEFAULT_YEAR_MIN
    year_max = params.year.year_max if params.year else DEFAULT_YEAR_MAX
    sentences = truncate(
        load_corpus(args.corpus, year_min, year_max), params.config.max_len
    )
    acc = evaluate_accuracy(params, sentences, vocab, tagset)
    print(f"token accuracy = {acc:.4f} over {len(sentences)} sentences")
    settings.resolved.update({"checkpoint": args.checkpoint, "corpus": args.corpus})
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    parser = _Parser(prog="chronotag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--threads", type=int, default=None)

    p = sub.add_parser("synth", help="generate a synthetic dated corpus")
    common(p)
    p.add_argument("--mode", default=None, choices=list(synthgen.MODES))
    p.add_argument("--per-decade", dest="per_decade", type=int, default=None)
    p.add_argument("--year-min", dest="year_min", type=int, default=None)
    p.add_argument("--year-max", dest="year_max", type=int, default=None)
    p.add_argument("--slope", type=float, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    def train_flags(p):
        common(p)
        p.add_argument("--corpus", required=True)
        p.add_argument("--run-dir", dest="run_dir", required=True)
        p.add_argument("--embeddings", default=None, help="word2vec text file")
        p.add_argument("--d-w", dest="d_w", type=int, default=None)
        p.add_argument("--d-y", dest="d_y", type=int, default=None)
        p.add_argument("--hidden", type=int, default=None)
        p.add_argument("--max-len", dest="max_len", type=int, default=None)
        p.add_argument("--vocab-size", dest="vocab_size", type=int, default=None)
        p.add_argument("--split", dest="split_fraction", type=float, default=None)
        p.add_argument("--epochs", type=int, default=None)
        p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
        p.add_argument("--lr", type=float, default=None)
        p.add_argument("--optimizer", choices=["adam", "sgd"], default=None)
        p.add_argument("--grad-clip", dest="grad_clip", type=float, default=None)
        p.add_argument("--year-min", dest="year_min", type=int, default=None)
        p.add_argument("--year-max", dest="year_max", type=int, default=None)

    p = sub.add_parser("train", help="train one tagger variant")
    train_flags(p)
    p.add_argument("--arch", choices=[LSTM, FEEDFORWARD], default=None)
    year_group = p.add_mutually_exclusive_group()
    year_group.add_argument(
        "--use-year", dest="use_year", action="store_true", default=None
    )
    year_group.add_argument("--no-year", dest="use_year", action="store_false")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="train all four variants, emit accuracy table")
    train_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("pca", help="PCA of a checkpoint's year embeddings")
    common(p)
    p.add_argument("--ckpt", dest="checkpoint", required=True)
    p.add_argument("--compare", default=None, help="second checkpoint")
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("date", help="date bucketed sentences by perplexity sweep")
    common(p)
    p.add_argument("--ckpt", dest="checkpoint", default=None)
    p.add_argument("--corpus", default=None)
    p.add_argument("--bucket", default=None, choices=[analysis.DECADE, analysis.YEAR])
    p.add_argument("--frac", type=float, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--year-min", dest="year_min", type=int, default=None)
    p.add_argument("--year-max", dest="year_max", type=int, default=None)
    p.add_argument(
        "--baseline", action="store_true", help="print the constant-prediction metric"
    )
    p.set_defaults(func=cmd_date)

    p = sub.add_parser("grad-check", help="finite-difference gradient check")
    common(p)
    p.add_argument("--arch", choices=[LSTM, FEEDFORWARD], default=None)
    year_group = p.add_mutually_exclusive_group()
    year_group.add_argument(
        "--use-year", dest="use_year", action="store_true", default=None
    )
    year_group.add_argument("--no-year", dest="use_year", action="store_false")
    p.add_argument("--d-w", dest="d_w", type=int, default=None)
    p.add_argument("--d-y", dest="d_y", type=int, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--tags", type=int, default=None)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("eval", help="token accuracy of a checkpoint on a corpus")
    common(p)
    p.add_argument("--ckpt", dest="checkpoint", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"chronotag: numerical failure: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"chronotag: data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"chronotag: invalid arguments: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
