"""Platt scaling of raw bot scores, fitted out-of-fold."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, NonFiniteScore, SingleClassCalibration, TooFewSamples
from .learners import FittedLearner, LearnerParams, as_matrix, encode_labels, fit_learner

MAX_ITER = 100
GRAD_TOL = 1e-8


def _sigmoid_bot(scores: np.ndarray, a: float, b: float) -> np.ndarray:
    """P(bot | s) = 1 / (1 + exp(a*s + b)), evaluated without overflow."""
    f = a * scores + b
    out = np.empty_like(f)
    pos = f >= 0
    ef = np.exp(-f[pos])
    out[pos] = ef / (1.0 + ef)
    out[~pos] = 1.0 / (1.0 + np.exp(f[~pos]))
    return out


def _nll(f: np.ndarray, t: np.ndarray) -> float:
    # -sum t*log(p) + (1-t)*log(1-p) with p = 1/(1+exp(f))
    return float(np.sum(t * np.logaddexp(0.0, f) + (1.0 - t) * np.logaddexp(0.0, -f)))


def platt_fit(scores, labels) -> tuple[float, float]:
    """Fit (a, b) by damped Newton on the likelihood with Platt's smoothed targets."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = encode_labels(labels)
    if s.size != y.size:
        raise DimensionMismatch(f"{s.size} scores but {y.size} labels")
    if not np.all(np.isfinite(s)):
        raise NonFiniteScore("calibration scores must be finite")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassCalibration("Platt scaling needs both classes")
    t = np.where(y == 1, (n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0))

    a, b = 0.0, math.log((n_neg + 1.0) / (n_pos + 1.0))
    loss = _nll(a * s + b, t)
    for _ in range(MAX_ITER):
        p = _sigmoid_bot(s, a, b)
        d1 = t - p
        ga, gb = float(np.dot(s, d1)), float(np.sum(d1))
        if max(abs(ga), abs(gb)) < GRAD_TOL:
            break
        w = p * (1.0 - p)
        h11 = float(np.dot(s * s, w)) + 1e-12
        h22 = float(np.sum(w)) + 1e-12
        h21 = float(np.dot(s, w))
        det = h11 * h22 - h21 * h21
        da = -(h22 * ga - h21 * gb) / det
        db = -(-h21 * ga + h11 * gb) / det
        step = 1.0
        directional = ga * da + gb * db
        while step >= 1e-10:
            na, nb = a + step * da, b + step * db
            new_loss = _nll(na * s + nb, t)
            if new_loss < loss + 1e-4 * step * directional:
                a, b, loss = na, nb, new_loss
                break
            step /= 2.0
        else:
            break
    return a, b


def platt_apply(scores, a: float, b: float) -> np.ndarray:
    return _sigmoid_bot(np.asarray(scores, dtype=np.float64), a, b)


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Index arrays of k class-balanced folds (shuffled within class by seed)."""
    from .evaluation import stratified_kfold_indices

    return stratified_kfold_indices(y, k, seed)


@dataclass(frozen=True)
class CalibratedMember:
    learner: FittedLearner
    a: float
    b: float


@dataclass(frozen=True)
class FieldClassifier:
    """Calibrated learner(s) bound to one field's feature schema.

    With no members the classifier is a constant-prior fallback returning
    ``prior`` as its bot probability.
    """

    field: str
    kind: str
    feature_names: tuple[str, ...]
    members: tuple[CalibratedMember, ...] = ()
    prior: float = 0.5
    flags: tuple[str, ...] = ()

    @property
    def feature_count(self) -> int:
        return len(self.feature_names)

    @property
    def is_fallback(self) -> bool:
        return not self.members

    def predict_proba(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape[1] != self.feature_count:
            raise DimensionMismatch(
                f"{self.field} classifier expects {self.feature_count} features, got {X.shape[1]}")
        n = X.shape[0]
        if not self.members:
            p_bot = np.full(n, self.prior)
        else:
            p_bot = np.zeros(n)
            for m in self.members:
                p_bot = p_bot + platt_apply(m.learner.predict_proba(X)[:, 0], m.a, m.b)
            p_bot = p_bot / len(self.members)
        return np.column_stack([p_bot, 1.0 - p_bot])


def calibrated_fit(kind: str, X, y, params: LearnerParams | None = None, k: int = 5,
                   seed: int = 0, field: str = "", feature_names=None,
                   workers: int = 1) -> FieldClassifier:
    """Fit ``k`` fold members, each calibrated on the fold it did not see.

    ``k = 1`` fits and calibrates on all of the data.
    """
    X = as_matrix(X)
    y = encode_labels(y)
    n = y.size
    if n < k:
        raise TooFewSamples(f"{n} samples cannot form {k} folds")
    if y.min() == y.max():
        raise SingleClassCalibration("calibrated fit needs both classes")
    names = tuple(feature_names) if feature_names is not None else tuple(f"f{i}" for i in range(X.shape[1]))
    if len(names) != X.shape[1]:
        raise DimensionMismatch("feature_names length differs from the feature count")
    members = []
    if k == 1:
        learner = fit_learner(kind, X, y, params, workers=workers)
        a, b = platt_fit(learner.predict_proba(X)[:, 0], y)
        members.append(CalibratedMember(learner, a, b))
    else:
        folds = stratified_folds(y, k, seed)
        for fold in folds:
            mask = np.ones(n, dtype=bool)
            mask[fold] = False
            train = np.flatnonzero(mask)
            learner = fit_learner(kind, X[train], y[train], params, workers=workers)
            a, b = platt_fit(learner.predict_proba(X[fold])[:, 0], y[fold])
            members.append(CalibratedMember(learner, a, b))
    return FieldClassifier(field=field, kind=kind, feature_names=names, members=tuple(members),
                           prior=float(y.mean()))


def calibrated_predict(fc: FieldClassifier, x) -> np.ndarray:
    X = as_matrix(x)
    out = fc.predict_proba(X)
    return out[0] if (not sp.issparse(x) and np.ndim(x) == 1) else out
