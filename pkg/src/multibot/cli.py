"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.  Failures
print one ``error: <Kind>: <message>`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .ensemble import (
    FIELDS,
    PREDICTION_COLUMNS,
    TrainConfig,
    compare_learners,
    predict_batch,
    prediction_row,
    prepare_training,
    train_ensemble,
)
from .errors import BotDetectorError, DataError, ParseError
from .evaluation import EvalMode, evaluate, split_indices
from .features import NameCharTable, TfidfConfig, build_char_table
from .importance import mdi_importances, top_terms
from .learners import LEARNER_KINDS, encode_labels
from .modelstore import load_model, save_model
from .records import FieldMapping, PlatformKind, count_dataset, manifest_from_dict, read_records
from .synth import SynthConfig, write_dataset

logger = logging.getLogger("multibot")

WORKERS_ENV = "MULTIBOT_WORKERS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class CommandOutcome:
    exit_code: int
    written: list[str] = field(default_factory=list)


def _default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            pass
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config (datasets, seed, learners)")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--workers", type=int, help=f"worker threads (default ${WORKERS_ENV} or CPU count)")
    common.add_argument("--format", choices=("text", "delimited"), default="text")
    common.add_argument("--output", "-o", type=Path, help="output path (default stdout)")
    common.add_argument("-v", "--verbose", action="store_true")

    data = _Parser(add_help=False)
    data.add_argument("--input", type=Path, help="newline-delimited record file")
    data.add_argument("--platform", choices=[p.value for p in PlatformKind], default=None)
    data.add_argument("--mapping", type=Path, help="JSON field mapping (required for platform custom)")

    parser = _Parser(prog="multibot", description="Multi-platform ensemble bot detector")
    parser.add_argument("--version", action="version", version=f"multibot {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("build-chartable", parents=[common, data], help="character table from a name corpus")
    p.add_argument("--names", type=Path, help="plain text file, one name per line")

    sub.add_parser("train", parents=[common], help="train and save an ensemble model")
    sub.add_parser("compare-learners", parents=[common], help="per-field accuracy of the four learner kinds")

    p = sub.add_parser("predict", parents=[common, data], help="classify users")
    p.add_argument("--model", type=Path, required=True)

    p = sub.add_parser("evaluate", parents=[common, data], help="score a model on labeled data")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--mode", default="overall", help="processed | overall | full-fields")
    p.add_argument("--held-out", action="store_true",
                   help="score only the 20%% test split of each config dataset")

    p = sub.add_parser("importance", parents=[common], help="MDI feature importances")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--field", choices=FIELDS, action="append")
    p.add_argument("--top", type=int, default=None, help="top-k words for the text fields")

    p = sub.add_parser("synth", parents=[common], help="write a synthetic labeled dataset")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--bot-fraction", type=float, default=0.5)
    p.add_argument("--regime", choices=("trivial", "overlapping"), default="trivial")
    p.add_argument("--dropout", type=float, default=0.0, help="per-field dropout applied to every group")
    p.add_argument("--platform-mix", default="twitter_v2=1",
                   help="comma separated platform=share pairs")

    p = sub.add_parser("inspect-model", parents=[common], help="print a model's header and selection")
    p.add_argument("--model", type=Path, required=True)
    return parser


# ---------------------------------------------------------------------------
# config handling


def _load_config(args) -> tuple[dict, Path]:
    if args.config is None:
        return {}, Path.cwd()
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {args.config} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ParseError("config must be a JSON object")
    return cfg, args.config.resolve().parent


def _digest(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:12]


def _train_config(cfg: dict, base: Path, args) -> TrainConfig:
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    table = None
    if cfg.get("char_table"):
        path = Path(cfg["char_table"])
        table = NameCharTable.load(path if path.is_absolute() else base / path)
    learners = cfg.get("learners", {})
    unknown = set(learners) - set(LEARNER_KINDS)
    if unknown:
        raise ParseError(f"unknown learner kinds in config: {', '.join(sorted(unknown))}")
    return TrainConfig(
        seed=seed,
        split_ratio=float(cfg.get("split_ratio", 0.8)),
        folds=int(cfg.get("folds", 5)),
        learner_overrides=learners,
        tfidf=TfidfConfig(**cfg.get("tfidf", {})),
        char_table=table,
        fixed_kinds=cfg.get("fixed_kinds", {}),
        created_at=cfg.get("created_at"),
        workers=args.workers or _default_workers(),
    )


def _config_datasets(cfg: dict, base: Path):
    entries = cfg.get("datasets")
    if not entries:
        raise ParseError("config lists no datasets")
    out = []
    for entry in entries:
        manifest = manifest_from_dict(entry, base)
        records = manifest.load()
        count_dataset(manifest, records)
        for err in manifest.errors:
            logger.warning("%s: %s", manifest.name, err)
        logger.info("dataset %s: %d users, bot fraction %s", manifest.name, manifest.record_count,
                    "n/a" if manifest.bot_fraction is None else f"{manifest.bot_fraction:.3f}")
        out.append((manifest.name, records))
    return out


def _input_records(args):
    if args.input is None:
        raise UsageError("--input is required")
    platform = PlatformKind(args.platform or ("custom" if args.mapping else "twitter_v2"))
    mapping = FieldMapping.from_file(args.mapping) if args.mapping else None
    records, errors = read_records(args.input, platform, mapping)
    for err in errors:
        logger.warning("%s: %s", args.input, err)
    return records


class _Output:
    def __init__(self, path: Path | None, outcome: CommandOutcome):
        self.path, self.outcome = path, outcome

    def __enter__(self):
        if self.path is None:
            self.fh = sys.stdout
        else:
            self.fh = open(self.path, "w", encoding="utf-8", newline="")
            self.outcome.written.append(str(self.path))
        return self.fh

    def __exit__(self, *exc):
        if self.path is not None:
            self.fh.close()
        else:
            self.fh.flush()


def _write_table(fh, columns, rows, fmt: str) -> None:
    if fmt == "delimited":
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
        return
    widths = [max(len(str(c)), *(len(str(r[i])) for r in rows)) if rows else len(str(c))
              for i, c in enumerate(columns)]
    fh.write("  ".join(str(c).ljust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
    for r in rows:
        fh.write("  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip() + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_build_chartable(args, outcome):
    if args.names:
        with open(args.names, encoding="utf-8") as fh:
            names = [line.rstrip("\n") for line in fh]
    else:
        records = _input_records(args)
        names = [r.username for r in records if r.username] + [r.screenname for r in records if r.screenname]
    table = build_char_table(names)
    with _Output(args.output, outcome) as fh:
        fh.write(table.to_text())
    logger.info("character table: %d characters from %d names", len(table.probs), len(names))


def cmd_train(args, outcome):
    cfg, base = _load_config(args)
    config = _train_config(cfg, base, args)
    logger.info("train: seed=%d config=%s workers=%d", config.seed, _digest(cfg), config.workers)
    datasets = _config_datasets(cfg, base)
    start = time.perf_counter()
    model = train_ensemble(datasets, config)
    logger.info("train: fitted in %.2fs", time.perf_counter() - start)
    if args.output is None:
        raise UsageError("train needs --output for the model file")
    size = save_model(model, args.output)
    outcome.written.append(str(args.output))
    for row in model.selection_report:
        logger.info("selected %s -> %s%s", row.field, row.kind, " (flagged)" if row.flagged else "")
    logger.info("model written: %s (%d bytes)", args.output, size)


def cmd_compare(args, outcome):
    cfg, base = _load_config(args)
    config = _train_config(cfg, base, args)
    logger.info("compare-learners: seed=%d config=%s", config.seed, _digest(cfg))
    start = time.perf_counter()
    results = compare_learners(prepare_training(_config_datasets(cfg, base), config), config)
    logger.info("compare-learners: %.2fs", time.perf_counter() - start)
    fmt = lambda v: "NA" if v is None else f"{v:.2f}"
    rows = []
    for fname in FIELDS:
        for kind in LEARNER_KINDS:
            cell = results.get(fname, {}).get(kind)
            if cell is None:
                rows.append([fname, kind, "NA", "NA", "NA", 0, 0])
            else:
                rows.append([fname, kind, fmt(cell["overall"]), fmt(cell["reddit"]), fmt(cell["instagram"]),
                             cell["n_train"], cell["n_test"]])
    with _Output(args.output, outcome) as fh:
        _write_table(fh, ["field", "learner", "accuracy", "reddit", "instagram", "n_train", "n_test"],
                     rows, args.format)


def cmd_predict(args, outcome):
    model = load_model(args.model)
    records = _input_records(args)
    start = time.perf_counter()
    preds = predict_batch(model, records, workers=args.workers or _default_workers())
    elapsed = time.perf_counter() - start
    logger.info("predict: %d users in %.3fs", len(preds), elapsed)
    with _Output(args.output, outcome) as fh:
        _write_table(fh, PREDICTION_COLUMNS, [prediction_row(p) for p in preds],
                     "delimited" if args.format == "delimited" else "text")


def _held_out(datasets, config: TrainConfig):
    out = []
    for i, (name, records) in enumerate(datasets):
        labeled = [r for r in records if r.label is not None]
        y = encode_labels([r.label for r in labeled])
        _, te = split_indices(y, config.split_ratio, [config.seed, i], require_both=False)
        out.append((name, [labeled[j] for j in te]))
    return out


def cmd_evaluate(args, outcome):
    model = load_model(args.model)
    mode = EvalMode.parse(args.mode)
    workers = args.workers or _default_workers()
    if args.input is not None:
        datasets = [(args.input.stem, [r for r in _input_records(args) if r.label is not None])]
    else:
        cfg, base = _load_config(args)
        if not cfg:
            raise UsageError("evaluate needs --input or --config")
        datasets = _config_datasets(cfg, base)
        if args.held_out:
            datasets = _held_out(datasets, _train_config(cfg, base, args))
    reports = []
    for name, records in datasets:
        start = time.perf_counter()
        reports.append(evaluate(model, records, mode, name=name, workers=workers))
        logger.info("evaluate %s: %d users in %.3fs", name, len(records), time.perf_counter() - start)
    with _Output(args.output, outcome) as fh:
        if args.format == "delimited":
            rows = [r.as_row() for r in reports]
            _write_table(fh, list(rows[0]) if rows else ["dataset"], [list(r.values()) for r in rows], "delimited")
        else:
            _write_table(fh, ["dataset", "mode", "accuracy (% processed)", "micro_f1", "macro_f1"],
                         [[r.dataset_name, r.mode.value, r.cell(),
                           "NA" if r.micro_f1 is None else f"{r.micro_f1:.2f}",
                           "NA" if r.macro_f1 is None else f"{r.macro_f1:.2f}"] for r in reports], "text")


def cmd_importance(args, outcome):
    model = load_model(args.model)
    rows = []
    for fname in args.field or FIELDS:
        fc = model.classifiers[fname]
        if args.top is not None and fname in ("description", "posts"):
            vocab = model.features.desc_tfidf if fname == "description" else model.features.posts_tfidf
            report = top_terms(fc, vocab, args.top)
        else:
            report = mdi_importances(fc)
            if args.top is not None:
                report = type(report)(report.field_kind, report.ranked[: args.top], report.normalized)
        rows += [[fname, rank, name, repr(score)] for rank, name, score in report.rows()]
    with _Output(args.output, outcome) as fh:
        _write_table(fh, ["field", "rank", "name", "score"], rows, args.format)


def cmd_synth(args, outcome):
    mix = {}
    for part in args.platform_mix.split(","):
        key, _, share = part.partition("=")
        try:
            mix[key.strip()] = float(share or 1)
        except ValueError:
            raise UsageError(f"bad platform share {part!r}") from None
    if args.output is None:
        raise UsageError("synth needs --output DIR")
    config = SynthConfig(n_users=args.n, bot_fraction=args.bot_fraction, platform_mix=mix,
                         regime=args.regime, dropout={g: args.dropout for g in
                                                      ("username", "screenname", "description",
                                                       "user_metadata", "posts")},
                         seed=args.seed if args.seed is not None else 0)
    cfg = write_dataset(config, args.output)
    outcome.written.append(str(args.output))
    logger.info("synth: %d users, seed=%d, %d files in %s", args.n, config.seed, len(cfg["datasets"]),
                args.output)


def cmd_inspect(args, outcome):
    model = load_model(args.model)
    with _Output(args.output, outcome) as fh:
        fh.write(f"format_version: {model.format_version}\n")
        fh.write(f"training_seed: {model.training_seed}\n")
        fh.write(f"created_at: {model.created_at or 'none'}\n")
        fh.write(f"char_table: {len(model.char_table.probs)} characters, {model.char_table.total_chars} total\n")
        fh.write(f"description vocabulary: {model.features.desc_tfidf.size}\n")
        fh.write(f"posts vocabulary: {model.features.posts_tfidf.size}\n")
        for row in model.selection_report:
            fc = model.classifiers[row.field]
            tags = ", ".join(filter(None, ["flagged" if row.flagged else "", "fallback" if row.fallback else "",
                                           *row.notes]))
            fh.write(f"{row.field}: {row.kind} members={len(fc.members)} features={fc.feature_count}"
                     f"{' [' + tags + ']' if tags else ''}\n")


COMMANDS = {
    "build-chartable": cmd_build_chartable,
    "train": cmd_train,
    "compare-learners": cmd_compare,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "importance": cmd_importance,
    "synth": cmd_synth,
    "inspect-model": cmd_inspect,
}


def run(argv=None) -> CommandOutcome:
    outcome = CommandOutcome(0)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
        start = time.perf_counter()
        COMMANDS[args.command](args, outcome)
        logger.info("%s finished in %.3fs", args.command, time.perf_counter() - start)
    except BrokenPipeError:
        # downstream reader went away (e.g. piped into head)
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"error: UsageError: {exc}", file=sys.stderr)
        outcome.exit_code = 1
    except BotDetectorError as exc:
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        outcome.exit_code = 2
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 3
        print(f"error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        outcome.exit_code = 3
    return outcome


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split())


def main(argv=None) -> int:
    return run(argv).exit_code


if __name__ == "__main__":
    sys.exit(main())
