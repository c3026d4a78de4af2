"""Mean-decrease-in-impurity importances for the field classifiers."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .calibration import FieldClassifier
from .features import TfidfModel
from .learners import FittedLearner, Tree


@dataclass(frozen=True)
class ImportanceReport:
    field_kind: str
    ranked: tuple[tuple[str, float], ...]
    normalized: bool

    def rows(self) -> list[tuple[int, str, float]]:
        return [(i + 1, name, score) for i, (name, score) in enumerate(self.ranked)]


def tree_impurity_decrease(tree: Tree, n_features: int) -> np.ndarray:
    """Per-feature sum of weighted impurity decrease, weights relative to the root."""
    out = np.zeros(n_features)
    root_w = tree.weight[0]
    if root_w <= 0:
        return out
    for i in np.flatnonzero(tree.feature >= 0):
        l, r = tree.left[i], tree.right[i]
        dec = (tree.weight[i] * tree.impurity[i] - tree.weight[l] * tree.impurity[l]
               - tree.weight[r] * tree.impurity[r])
        out[tree.feature[i]] += max(dec, 0.0) / root_w
    return out


def learner_mdi(learner: FittedLearner) -> np.ndarray:
    """Raw (unnormalised) MDI averaged over the learner's trees."""
    if not learner.trees:
        return np.zeros(learner.feature_count)
    total = np.zeros(learner.feature_count)
    for tree in learner.trees:
        total += tree_impurity_decrease(tree, learner.feature_count)
    return total / len(learner.trees)


def mdi_scores(fc: FieldClassifier) -> np.ndarray:
    raw = np.zeros(fc.feature_count)
    if fc.members:
        for m in fc.members:
            raw += learner_mdi(m.learner)
        raw /= len(fc.members)
    total = raw.sum()
    return raw / total if total > 0 else raw


def _rank(names, scores) -> tuple[tuple[str, float], ...]:
    order = sorted(range(len(names)), key=lambda i: (-scores[i], names[i]))
    return tuple((names[i], float(scores[i])) for i in order)


def mdi_importances(fc: FieldClassifier) -> ImportanceReport:
    scores = mdi_scores(fc)
    return ImportanceReport(fc.field, _rank(list(fc.feature_names), scores), bool(scores.sum() > 0))


def top_terms(fc: FieldClassifier, vocab: TfidfModel, k: int) -> ImportanceReport:
    """The ``k`` vocabulary words with the highest MDI (ties alphabetical)."""
    scores = mdi_scores(fc)[: vocab.size]
    if k > vocab.size:
        warnings.warn(f"k={k} exceeds vocabulary size {vocab.size}; returning the full ranking",
                      stacklevel=2)
        k = vocab.size
    ranked = _rank(vocab.terms, scores)[: max(k, 0)]
    return ImportanceReport(fc.field, ranked, bool(scores.sum() > 0))
