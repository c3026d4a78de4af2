"""Evaluation protocol: stratified splits, k-fold, metrics and per-dataset reports."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import EmptyInput, LengthMismatch, SingleClassDataset, TooFewPerClass
from .learners import encode_labels
from .records import Label, UserRecord


class EvalMode(str, Enum):
    PROCESSED_ONLY = "processed_only"
    UNPROCESSED_AS_HUMAN = "unprocessed_as_human"
    FULL_FIELDS_ONLY = "full_fields_only"

    @classmethod
    def parse(cls, text: str) -> "EvalMode":
        aliases = {"processed": cls.PROCESSED_ONLY, "overall": cls.UNPROCESSED_AS_HUMAN,
                   "full-fields": cls.FULL_FIELDS_ONLY, "full_fields": cls.FULL_FIELDS_ONLY}
        return aliases.get(text) or cls(text)


def _labels_of(records: Sequence[UserRecord]) -> np.ndarray:
    if any(r.label is None for r in records):
        raise SingleClassDataset("every record needs a bot/human label")
    return encode_labels([r.label for r in records])


def split_indices(y: np.ndarray, ratio: float, seed, require_both: bool = True):
    """Per-class shuffle, then round(ratio * class size) of each class to train."""
    classes = [c for c in (1, 0) if np.any(y == c)]
    if require_both and len(classes) < 2:
        raise SingleClassDataset("stratified split needs both classes")
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in (1, 0):
        idx = np.flatnonzero(y == c)
        rng.shuffle(idx)
        n_train = math.floor(ratio * idx.size + 0.5)
        train.append(idx[:n_train])
        test.append(idx[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(dataset: Sequence[UserRecord], ratio: float = 0.8, seed=0):
    """Return (train, test) record lists, each keeping the dataset's original order."""
    y = _labels_of(dataset)
    tr, te = split_indices(y, ratio, seed)
    return [dataset[i] for i in tr], [dataset[i] for i in te]


def stratified_kfold_indices(y: np.ndarray, k: int, seed) -> list[np.ndarray]:
    y = np.asarray(y)
    for c in (1, 0):
        count = int(np.sum(y == c))
        if 0 < count < k:
            raise TooFewPerClass(f"class {'bot' if c else 'human'} has {count} samples, fewer than k={k}")
    rng = np.random.default_rng(seed)
    folds: list[list[np.ndarray]] = [[] for _ in range(k)]
    offset = 0
    for c in (1, 0):
        idx = np.flatnonzero(y == c)
        rng.shuffle(idx)
        for j in range(k):
            # rotate the starting fold so remainders spread over different folds
            folds[(j + offset) % k].append(idx[j::k])
        offset = (offset + idx.size) % k
    return [np.sort(np.concatenate(f)) for f in folds]


def stratified_kfold(dataset: Sequence[UserRecord], k: int = 5, seed=0) -> list[list[UserRecord]]:
    y = _labels_of(dataset)
    return [[dataset[i] for i in fold] for fold in stratified_kfold_indices(y, k, seed)]


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    micro_f1: float
    macro_f1: float
    confusion: tuple[tuple[int, int], tuple[int, int]]  # rows truth (bot, human), cols predicted


def _f1(tp: int, fp: int, fn: int) -> Fraction:
    denom = 2 * tp + fp + fn
    return Fraction(0) if denom == 0 else Fraction(2 * tp, denom)


def compute_metrics(preds, truth) -> Metrics:
    """Accuracy, micro-F1 and macro-F1 in percent."""
    p = encode_labels(preds)
    t = encode_labels(truth)
    if p.size != t.size:
        raise LengthMismatch(f"{p.size} predictions but {t.size} labels")
    if p.size == 0:
        raise EmptyInput("no predictions to score")
    bb = int(np.sum((t == 1) & (p == 1)))
    bh = int(np.sum((t == 1) & (p == 0)))
    hb = int(np.sum((t == 0) & (p == 1)))
    hh = int(np.sum((t == 0) & (p == 0)))
    f1_bot = _f1(bb, hb, bh)
    f1_human = _f1(hh, bh, hb)
    micro = _f1(bb + hh, hb + bh, bh + hb)
    # exact rationals, rounded once, so results do not depend on operation order
    return Metrics(
        accuracy=float(Fraction(100 * (bb + hh), p.size)),
        micro_f1=float(100 * micro),
        macro_f1=float(50 * (f1_bot + f1_human)),
        confusion=((bb, bh), (hb, hh)),
    )


@dataclass
class EvalReport:
    dataset_name: str
    mode: EvalMode
    n_records: int
    n_evaluated: int
    pct_processed: float
    accuracy_processed: float | None
    accuracy_overall: float | None
    micro_f1: float | None
    macro_f1: float | None
    confusion: tuple[tuple[int, int], tuple[int, int]] | None

    def cell(self) -> str:
        """'accuracy (% processed)' as laid out in comparison tables."""
        if self.accuracy_overall is None:
            return f"NA ({self.pct_processed:.0f})"
        return f"{self.accuracy_overall:.2f} ({self.pct_processed:.0f})"

    def as_row(self) -> dict:
        fmt = lambda v: "NA" if v is None else f"{v:.2f}"
        conf = self.confusion or ((0, 0), (0, 0))
        return {
            "dataset": self.dataset_name,
            "mode": self.mode.value,
            "n_records": self.n_records,
            "n_evaluated": self.n_evaluated,
            "pct_processed": f"{self.pct_processed:.2f}",
            "accuracy_processed": fmt(self.accuracy_processed),
            "accuracy_overall": fmt(self.accuracy_overall),
            "micro_f1": fmt(self.micro_f1),
            "macro_f1": fmt(self.macro_f1),
            "tp_bot": conf[0][0], "fn_bot": conf[0][1], "fp_bot": conf[1][0], "tn_bot": conf[1][1],
        }


def evaluate(model, dataset: Sequence[UserRecord], mode: EvalMode | str = EvalMode.UNPROCESSED_AS_HUMAN,
             name: str = "dataset", workers: int = 1, predictions=None) -> EvalReport:
    """Score a labeled dataset under one of the three evaluation conventions.

    ``pct_processed`` is the share of records the mode scores: users with at
    least one field (processed_only), every user (unprocessed_as_human), or
    users with all five field groups (full_fields_only).
    """
    from .ensemble import FIELDS, field_present, predict_batch

    mode = EvalMode.parse(mode) if isinstance(mode, str) else mode
    truth = _labels_of(dataset)
    preds = predictions if predictions is not None else predict_batch(model, dataset, workers=workers)
    n = len(dataset)
    used = np.array([p.fields_used for p in preds], dtype=np.int64)
    labels = np.array([1 if p.label is Label.BOT else 0 for p in preds], dtype=np.int64)

    if mode is EvalMode.PROCESSED_ONLY:
        scope = used >= 1
    elif mode is EvalMode.UNPROCESSED_AS_HUMAN:
        scope = np.ones(n, dtype=bool)
    else:
        scope = np.array([all(field_present(r, f) for f in FIELDS) for r in dataset], dtype=bool)

    n_eval = int(scope.sum())
    pct = 100.0 * n_eval / n if n else 0.0
    if n_eval == 0:
        return EvalReport(name, mode, n, 0, pct, None, None, None, None, None)
    # unprocessed users are already labelled human by the ensemble
    m = compute_metrics(labels[scope], truth[scope])
    processed = scope & (used >= 1)
    acc_proc = compute_metrics(labels[processed], truth[processed]).accuracy if processed.any() else None
    return EvalReport(name, mode, n, n_eval, pct, acc_proc, m.accuracy, m.micro_f1, m.macro_f1, m.confusion)


def learner_comparison(datasets, config=None):
    """Per-field x per-learner accuracy table on the meta-test split (with platform subsets)."""
    from .ensemble import TrainConfig, compare_learners, prepare_training

    config = config or TrainConfig()
    prepared = prepare_training(datasets, config)
    return compare_learners(prepared, config)
