"""The five-field ensemble: per-field calibrated classifiers, null for absent fields,
unweighted mean of the non-null (bot, human) tuples and an argmax label."""

from __future__ import annotations

import logging
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .calibration import FieldClassifier, calibrated_fit
from .errors import EmptyCorpus, EmptyResults, EmptyVocabulary, SingleClassTraining
from .evaluation import split_indices
from .features import (
    METADATA_FEATURES,
    NAME_FEATURES,
    POST_STAT_FEATURES,
    SCREENNAME_FEATURES,
    NameCharTable,
    TfidfConfig,
    TfidfModel,
    build_char_table,
    fit_tfidf,
    metadata_features,
    post_stats,
    posts_document,
    screenname_features,
    username_features,
)
from .learners import LEARNER_KINDS, LearnerParams, encode_labels, fit_learner
from .records import Label, PlatformKind, UserRecord

logger = logging.getLogger(__name__)

FORMAT_VERSION = "0.1"

USERNAME = "username"
SCREENNAME = "screenname"
DESCRIPTION = "description"
USER_METADATA = "user_metadata"
POSTS = "posts"
FIELDS = (USERNAME, SCREENNAME, DESCRIPTION, USER_METADATA, POSTS)

# platform subsets whose accuracy must be non-zero for a learner to be selected
CHECKED_PLATFORMS = ("reddit", "instagram")


def field_present(record: UserRecord, name: str) -> bool:
    if name == USER_METADATA:
        return record.metadata is not None
    return getattr(record, name) is not None


@dataclass(frozen=True)
class FeatureSpace:
    """Everything needed to turn records into per-field matrices."""

    char_table: NameCharTable
    desc_tfidf: TfidfModel
    posts_tfidf: TfidfModel

    def feature_names(self, name: str) -> tuple[str, ...]:
        if name == USERNAME:
            return NAME_FEATURES
        if name == SCREENNAME:
            return SCREENNAME_FEATURES
        if name == DESCRIPTION:
            return tuple(self.desc_tfidf.terms)
        if name == USER_METADATA:
            return METADATA_FEATURES
        return tuple(self.posts_tfidf.terms) + POST_STAT_FEATURES

    def matrix(self, records: Sequence[UserRecord], name: str):
        """Feature matrix for records that all carry field ``name``."""
        if name == USERNAME:
            rows = [username_features(r.username, self.char_table) for r in records]
            return np.array(rows).reshape(len(records), len(NAME_FEATURES))
        if name == SCREENNAME:
            rows = [screenname_features(r.screenname, self.char_table) for r in records]
            return np.array(rows).reshape(len(records), len(SCREENNAME_FEATURES))
        if name == DESCRIPTION:
            return self.desc_tfidf.transform([r.description for r in records])
        if name == USER_METADATA:
            rows = [metadata_features(r.metadata) for r in records]
            return np.array(rows).reshape(len(records), len(METADATA_FEATURES))
        text = self.posts_tfidf.transform([posts_document(r.posts) for r in records])
        stats = np.array([post_stats(r.posts) for r in records]).reshape(len(records), len(POST_STAT_FEATURES))
        return sp.hstack([text, sp.csr_matrix(stats)], format="csr")

    def featurize(self, records: Sequence[UserRecord], name: str):
        """(matrix, indices of records where the field is present)."""
        idx = np.array([i for i, r in enumerate(records) if field_present(r, name)], dtype=np.int64)
        return self.matrix([records[i] for i in idx], name), idx


@dataclass(frozen=True)
class SelectionRow:
    field: str
    kind: str
    flagged: bool = False
    fallback: bool = False
    accuracies: Mapping[str, Mapping[str, float | None]] = field(default_factory=dict)
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class EnsembleModel:
    classifiers: Mapping[str, FieldClassifier]
    features: FeatureSpace
    selection_report: tuple[SelectionRow, ...]
    training_seed: int = 0
    format_version: str = FORMAT_VERSION
    created_at: str | None = None
    learner_params: Mapping[str, Mapping] = field(default_factory=dict)

    @property
    def char_table(self) -> NameCharTable:
        return self.features.char_table


@dataclass(frozen=True)
class Prediction:
    user_id: str
    platform: PlatformKind
    per_field: Mapping[str, tuple[float, float] | None]
    aggregate: tuple[float, float]
    label: Label
    fields_used: int
    no_data: bool = False


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    split_ratio: float = 0.8
    folds: int = 5
    learner_overrides: Mapping[str, Mapping] = field(default_factory=dict)
    tfidf: TfidfConfig = field(default_factory=TfidfConfig)
    char_table: NameCharTable | None = None
    # field -> learner kind; skips the comparison for the listed fields
    fixed_kinds: Mapping[str, str] = field(default_factory=dict)
    created_at: str | None = None
    workers: int = 1

    def params(self, kind: str) -> LearnerParams:
        return LearnerParams.defaults(kind, seed=self.seed, **dict(self.learner_overrides.get(kind, {})))


# ---------------------------------------------------------------------------
# model selection


@dataclass(frozen=True)
class FieldChoice:
    kind: str
    flagged: bool = False


def select_field_models(results: Mapping[str, Mapping[str, Mapping[str, float | None]]]) -> dict[str, FieldChoice]:
    """Pick one learner kind per field.

    ``results[field][kind]`` maps ``"overall"`` and each platform subset name
    to an accuracy, ``None`` meaning not applicable.  The best overall learner
    among those scoring above zero on every applicable non-Twitter subset
    wins; without such a learner the best overall one is taken and flagged.
    """
    if not results:
        raise EmptyResults("no comparison results to select from")
    choice = {}
    for fname, per_kind in results.items():
        scored = [(k, per_kind[k]) for k in LEARNER_KINDS
                  if k in per_kind and per_kind[k].get("overall") is not None]
        if not scored:
            raise EmptyResults(f"no learner produced an accuracy for field {fname}")
        qualified = [(k, r) for k, r in scored
                     if all(r.get(p) is None or r.get(p) > 0 for p in CHECKED_PLATFORMS)]
        pool = qualified or scored
        best_kind, best_acc = pool[0][0], pool[0][1]["overall"]
        for k, r in pool[1:]:
            if r["overall"] > best_acc:
                best_kind, best_acc = k, r["overall"]
        choice[fname] = FieldChoice(best_kind, flagged=not qualified)
    return choice


# ---------------------------------------------------------------------------
# training


@dataclass
class PreparedData:
    train: list[UserRecord]
    test: list[UserRecord]
    features: FeatureSpace
    matrices: dict = field(default_factory=dict)  # (split, field) -> (X, idx)

    def get(self, split: str, name: str):
        key = (split, name)
        if key not in self.matrices:
            records = self.train if split == "train" else self.test
            self.matrices[key] = self.features.featurize(records, name)
        return self.matrices[key]


_FALLBACK_CHARS = string.ascii_letters + string.digits + string.punctuation + " "


def build_feature_space(records: Sequence[UserRecord], config: TrainConfig) -> FeatureSpace:
    table = config.char_table
    if table is None:
        names = [r.username for r in records if r.username] + [r.screenname for r in records if r.screenname]
        try:
            table = build_char_table(names)
        except EmptyCorpus:
            logger.warning("no names in training data; using a uniform character table")
            table = build_char_table([_FALLBACK_CHARS])

    def tfidf(docs):
        try:
            return fit_tfidf(docs, config.tfidf)
        except (EmptyCorpus, EmptyVocabulary):
            return TfidfModel.empty(config.tfidf)

    return FeatureSpace(
        char_table=table,
        desc_tfidf=tfidf([r.description for r in records if r.description is not None]),
        posts_tfidf=tfidf([posts_document(r.posts) for r in records if r.posts is not None]),
    )


def _as_datasets(datasets) -> list[tuple[str, list[UserRecord]]]:
    out = []
    for i, item in enumerate(datasets):
        if isinstance(item, tuple):
            out.append((str(item[0]), list(item[1])))
        else:
            out.append((f"dataset{i}", list(item)))
    return out


def prepare_training(datasets, config: TrainConfig) -> PreparedData:
    """Stratified 80-20 split of every dataset, concatenated into meta-train/meta-test."""
    train, test = [], []
    for i, (name, records) in enumerate(_as_datasets(datasets)):
        labeled = [r for r in records if r.label is not None]
        if len(labeled) < len(records):
            logger.warning("%s: ignoring %d unlabeled records", name, len(records) - len(labeled))
        if not labeled:
            continue
        y = encode_labels([r.label for r in labeled])
        tr, te = split_indices(y, config.split_ratio, [config.seed, i], require_both=False)
        train.extend(labeled[j] for j in tr)
        test.extend(labeled[j] for j in te)
    if not train:
        raise EmptyResults("no labeled training records")
    y = encode_labels([r.label for r in train])
    if y.min() == y.max():
        raise SingleClassTraining("meta-training set contains a single class")
    return PreparedData(train, test, build_feature_space(train, config))


def _accuracy(pred: np.ndarray, truth: np.ndarray) -> float | None:
    return None if truth.size == 0 else 100.0 * float(np.mean(pred == truth))


def compare_learners(prepared: PreparedData, config: TrainConfig, fields=FIELDS) -> dict:
    """results[field][kind] = {"overall", "reddit", "instagram", "n_train", "n_test"}."""
    results: dict = {}
    for fname in fields:
        Xtr, itr = prepared.get("train", fname)
        Xte, ite = prepared.get("test", fname)
        results[fname] = {}
        if itr.size == 0:
            continue
        ytr = encode_labels([prepared.train[i].label for i in itr])
        yte = encode_labels([prepared.test[i].label for i in ite])
        fams = np.array([prepared.test[i].platform.family for i in ite])
        for kind in LEARNER_KINDS:
            cell = {"overall": None, **{p: None for p in CHECKED_PLATFORMS},
                    "n_train": int(itr.size), "n_test": int(ite.size)}
            try:
                learner = fit_learner(kind, Xtr, ytr, config.params(kind), workers=config.workers)
            except SingleClassTraining:
                results[fname][kind] = cell
                continue
            if ite.size:
                pred = learner.predict(Xte)
                cell["overall"] = _accuracy(pred, yte)
                for p in CHECKED_PLATFORMS:
                    sub = fams == p
                    cell[p] = _accuracy(pred[sub], yte[sub])
            results[fname][kind] = cell
    return results


def _fallback(fname: str, features: FeatureSpace, prior: float, note: str) -> FieldClassifier:
    return FieldClassifier(field=fname, kind="constant_prior", feature_names=features.feature_names(fname),
                           prior=prior, flags=(note,))


def train_ensemble(datasets, config: TrainConfig | None = None) -> EnsembleModel:
    """Split, compare learners per field, select, and refit the selected kinds calibrated."""
    config = config or TrainConfig()
    prepared = prepare_training(datasets, config)
    features = prepared.features
    y_all = encode_labels([r.label for r in prepared.train])
    overall_prior = float(y_all.mean())

    to_compare = [f for f in FIELDS if f not in config.fixed_kinds]
    results = compare_learners(prepared, config, to_compare)
    scored = {f: r for f, r in results.items() if any(c["overall"] is not None for c in r.values())}
    choices = select_field_models(scored) if scored else {}
    for f, kind in config.fixed_kinds.items():
        choices[f] = FieldChoice(kind)

    classifiers, report = {}, []
    for fname in FIELDS:
        X, idx = prepared.get("train", fname)
        accs = {k: {key: v for key, v in cell.items()} for k, cell in results.get(fname, {}).items()}
        if idx.size == 0:
            classifiers[fname] = _fallback(fname, features, overall_prior, "no_field_data")
            report.append(SelectionRow(fname, "constant_prior", fallback=True, accuracies=accs,
                                       notes=("no_field_data",)))
            continue
        if X.shape[1] == 0:
            y = encode_labels([prepared.train[i].label for i in idx])
            classifiers[fname] = _fallback(fname, features, float(y.mean()), "empty_feature_space")
            report.append(SelectionRow(fname, "constant_prior", fallback=True, accuracies=accs,
                                       notes=("empty_feature_space",)))
            continue
        choice = choices.get(fname, FieldChoice("decision_tree", flagged=True))
        y = encode_labels([prepared.train[i].label for i in idx])
        minority = int(min(y.sum(), y.size - y.sum()))
        if minority == 0:
            classifiers[fname] = _fallback(fname, features, float(y.mean()), "single_class")
            report.append(SelectionRow(fname, "constant_prior", flagged=choice.flagged, fallback=True,
                                       accuracies=accs, notes=("single_class",)))
            continue
        k = config.folds
        notes = []
        if minority < k:
            k = minority if minority >= 2 else 1
            notes.append(f"folds_reduced_to_{k}")
        fc = calibrated_fit(choice.kind, X, y, config.params(choice.kind), k=k, seed=config.seed,
                            field=fname, feature_names=features.feature_names(fname), workers=config.workers)
        if notes:
            fc = FieldClassifier(fc.field, fc.kind, fc.feature_names, fc.members, fc.prior, tuple(notes))
        classifiers[fname] = fc
        report.append(SelectionRow(fname, choice.kind, flagged=choice.flagged, accuracies=accs,
                                   notes=tuple(notes)))
    return EnsembleModel(
        classifiers=classifiers,
        features=features,
        selection_report=tuple(report),
        training_seed=config.seed,
        created_at=config.created_at,
        learner_params={k: config.params(k).to_dict() for k in LEARNER_KINDS},
    )


# ---------------------------------------------------------------------------
# inference


def aggregate(per_field: Mapping[str, tuple[float, float] | None]) -> tuple[tuple[float, float], Label, int]:
    """Mean of the non-null tuples; (0, 1)/human when nothing is present; ties go to human."""
    present = [v for v in per_field.values() if v is not None]
    if not present:
        return (0.0, 1.0), Label.HUMAN, 0
    bot = sum(v[0] for v in present) / len(present)
    human = sum(v[1] for v in present) / len(present)
    return (bot, human), (Label.BOT if bot > human else Label.HUMAN), len(present)


def _predict_chunk(model: EnsembleModel, records: Sequence[UserRecord]) -> list[Prediction]:
    n = len(records)
    probs = {}
    for fname in FIELDS:
        out = np.full((n, 2), np.nan)
        X, idx = model.features.featurize(records, fname)
        if idx.size:
            out[idx] = model.classifiers[fname].predict_proba(X)
        probs[fname] = out
    preds = []
    for i, r in enumerate(records):
        per_field = {}
        for fname in FIELDS:
            row = probs[fname][i]
            per_field[fname] = None if np.isnan(row[0]) else (float(row[0]), float(row[1]))
        agg, label, used = aggregate(per_field)
        preds.append(Prediction(r.user_id, r.platform, per_field, agg, label, used, no_data=used == 0))
    return preds


def predict_batch(model: EnsembleModel, records: Sequence[UserRecord], workers: int = 1,
                  chunk_size: int = 2048) -> list[Prediction]:
    """Order-preserving predictions; results do not depend on ``workers``."""
    records = list(records)
    chunks = [records[i:i + chunk_size] for i in range(0, len(records), chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: _predict_chunk(model, c), chunks))
    else:
        parts = [_predict_chunk(model, c) for c in chunks]
    return [p for part in parts for p in part]


def predict_user(model: EnsembleModel, record: UserRecord) -> Prediction:
    return _predict_chunk(model, [record])[0]


PREDICTION_COLUMNS = ("user_id", "platform", "p_bot", "p_human", "label", "fields_used",
                      *(f"p_bot_{f}" for f in FIELDS))


def prediction_row(p: Prediction) -> list[str]:
    cells = [p.user_id, p.platform.value, repr(p.aggregate[0]), repr(p.aggregate[1]),
             p.label.value, str(p.fields_used)]
    cells += ["" if p.per_field[f] is None else repr(p.per_field[f][0]) for f in FIELDS]
    return cells
