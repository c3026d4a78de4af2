"""Tree learners written from scratch: CART, random forest, gradient boosting, AdaBoost.

All four share one breadth-first tree grower.  Each level of the tree is grown
with a handful of vectorised numpy passes over (row, column, value) entries, so
dense metadata matrices and wide sparse TF-IDF matrices go through the same
code.  Sparse columns keep their implicit zeros implicit: every (node, column)
pair gets one pseudo-entry holding the class totals of its zero rows.

Labels are encoded as 1 = bot, 0 = human; probability outputs are ordered
(p_bot, p_human).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    InconsistentDimensions,
    SingleClassTraining,
)

DECISION_TREE = "decision_tree"
RANDOM_FOREST = "random_forest"
GRADIENT_BOOSTING = "gradient_boosting"
ADA_BOOST = "ada_boost"
LEARNER_KINDS = (DECISION_TREE, RANDOM_FOREST, GRADIENT_BOOSTING, ADA_BOOST)

GINI = "gini"
MSE = "mse"

NEWTON_EPS = 1e-12
_REL_TOL = 1e-12


@dataclass(frozen=True)
class LearnerParams:
    kind: str = DECISION_TREE
    max_depth: int = 8
    n_estimators: int = 1
    min_samples_leaf: int = 5
    learning_rate: float = 1.0
    feature_subsample: str = "all"  # "all" or "sqrt"
    bootstrap: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if self.max_depth < 1 or self.n_estimators < 0 or self.min_samples_leaf < 1:
            raise ValueError("max_depth and min_samples_leaf must be >= 1, n_estimators >= 0")
        if not (0.0 < self.learning_rate <= 1.0):
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.feature_subsample not in ("all", "sqrt"):
            raise ValueError("feature_subsample must be 'all' or 'sqrt'")

    @classmethod
    def defaults(cls, kind: str, **overrides) -> "LearnerParams":
        base = {
            DECISION_TREE: dict(max_depth=8, n_estimators=1, min_samples_leaf=5),
            RANDOM_FOREST: dict(max_depth=16, n_estimators=100, min_samples_leaf=1,
                                feature_subsample="sqrt", bootstrap=True),
            GRADIENT_BOOSTING: dict(max_depth=3, n_estimators=100, min_samples_leaf=1,
                                    learning_rate=0.1),
            ADA_BOOST: dict(max_depth=1, n_estimators=50, min_samples_leaf=1),
        }[kind]
        return cls(kind=kind, **{**base, **overrides})

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "max_depth": self.max_depth,
            "n_estimators": self.n_estimators,
            "min_samples_leaf": self.min_samples_leaf,
            "learning_rate": self.learning_rate,
            "feature_subsample": self.feature_subsample,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Tree:
    """Flat binary tree in preorder; ``feature == -1`` marks a leaf.

    ``value`` holds (bot, human) weight totals for classification trees and the
    (already learning-rate scaled) leaf output in column 0 for boosting trees.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity: np.ndarray
    weight: np.ndarray
    n_samples: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=np.int64)
        for i in range(self.node_count):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = np.arange(n)
        while active.size:
            feat = self.feature[node[active]]
            inner = feat >= 0
            active = active[inner]
            if not active.size:
                break
            vals = column_values(X, active, feat[inner])
            cur = node[active]
            node[active] = np.where(vals <= self.threshold[cur], self.left[cur], self.right[cur])
        return node


def column_values(X, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X[rows, cols], dtype=np.float64).ravel()
    return X[rows, cols]


def as_matrix(X):
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
        X.sum_duplicates()
        return X
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise InconsistentDimensions(f"expected a 2-D feature matrix, got {X.ndim} dimensions")
    return X


def encode_labels(y) -> np.ndarray:
    """Map labels to 1 = bot, 0 = human."""
    out = []
    for v in y:
        v = getattr(v, "value", v)
        if v in ("bot", 1, True):
            out.append(1)
        elif v in ("human", 0, False):
            out.append(0)
        else:
            raise ValueError(f"unrecognised label {v!r}")
    return np.array(out, dtype=np.int64)


# ---------------------------------------------------------------------------
# tree growing


@dataclass
class _Entries:
    """Non-implicit matrix cells sorted by (column, value).

    Sparse matrices with negative values are expanded densely so that the
    implicit zeros of a column always sort before its explicit values.
    """

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    dense: bool
    n_features: int

    @classmethod
    def from_matrix(cls, X) -> "_Entries":
        n, d = X.shape
        if sp.issparse(X) and not (X.data < 0).any():
            coo = X.tocoo()
            nz = coo.data != 0
            rows, cols, vals, dense = coo.row[nz], coo.col[nz], coo.data[nz], False
        else:
            M = X.toarray() if sp.issparse(X) else X
            rows = np.repeat(np.arange(n), d)
            cols = np.tile(np.arange(d), n)
            vals, dense = M.ravel(), True
        rows = rows.astype(np.int64)
        cols = cols.astype(np.int64)
        vals = vals.astype(np.float64)
        order = np.lexsort((rows, vals, cols))
        return cls(rows[order], cols[order], vals[order], dense, d)


def _proxy(stats: np.ndarray, criterion: str) -> np.ndarray:
    """Quantity whose children-sum is maximised by the best split.

    Gini: sum_k w_k^2 / W.  Squared error: (sum w*r)^2 / W.
    """
    if criterion == GINI:
        w = stats[..., 1] + stats[..., 2]
        num = stats[..., 1] ** 2 + stats[..., 2] ** 2
    else:
        w = stats[..., 1]
        num = stats[..., 2] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(w > 0, num / np.where(w > 0, w, 1.0), 0.0)


def _impurity(stats: np.ndarray, criterion: str) -> np.ndarray:
    if criterion == GINI:
        w = stats[..., 1] + stats[..., 2]
        safe = np.where(w > 0, w, 1.0)
        return np.where(w > 0, 1.0 - (stats[..., 1] / safe) ** 2 - (stats[..., 2] / safe) ** 2, 0.0)
    w = stats[..., 1]
    safe = np.where(w > 0, w, 1.0)
    mean = stats[..., 2] / safe
    return np.where(w > 0, np.maximum(stats[..., 3] / safe - mean * mean, 0.0), 0.0)


def _node_weight(stats: np.ndarray, criterion: str) -> np.ndarray:
    return stats[..., 1] + stats[..., 2] if criterion == GINI else stats[..., 1]


def _best_splits(er, ec, ev, en, dense: bool, d: int, n_local: int, stats: np.ndarray,
                 totals: np.ndarray, node_rows: np.ndarray, criterion: str, min_leaf: int,
                 rng, max_features: int | None):
    """Best (feature, threshold) per frontier node, or feature -1 when no split helps.

    Entries must arrive sorted by (node, column, value) and belong to
    splittable nodes only.
    """
    best_feat = np.full(n_local, -1, dtype=np.int64)
    best_thr = np.zeros(n_local)
    if er.size == 0:
        return best_feat, best_thr
    es = stats[er]
    key = en * d + ec
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    ends = np.r_[starts[1:], key.size]
    g_node, g_col = en[starts], ec[starts]
    g_min, g_max = ev[starts], ev[ends - 1]
    if dense:
        has_zero = np.zeros(starts.size, dtype=bool)
        zstats = np.zeros((starts.size, es.shape[1]))
    else:
        # rows of the node without an explicit cell hold an implicit 0 < every explicit value
        has_zero = (ends - starts) < node_rows[g_node]
        zstats = totals[g_node] - np.add.reduceat(es, starts, axis=0)
        zstats[~has_zero] = 0.0
    varying = (g_min < g_max) | has_zero

    if max_features is not None:
        cand = np.flatnonzero(varying)
        if cand.size:
            draw = rng.random(cand.size)
            o = np.lexsort((draw, g_node[cand]))
            ranked = g_node[cand][o]
            rank = np.arange(cand.size) - np.searchsorted(ranked, ranked, side="left")
            varying = np.zeros_like(varying)
            varying[cand[o[rank < max_features]]] = True
    if not varying.any():
        return best_feat, best_thr

    group_id = np.repeat(np.arange(starts.size), ends - starts)
    csum = np.cumsum(es, axis=0)
    base = np.vstack([np.zeros((1, es.shape[1])), csum[starts[1:] - 1]])
    prefix = csum - base[group_id]

    nxt_same = np.r_[group_id[1:] == group_id[:-1], False]
    boundary = nxt_same & np.r_[ev[1:] > ev[:-1], False] & varying[group_id]
    idx = np.flatnonzero(boundary)
    gi = group_id[idx]
    lo, hi = ev[idx], ev[idx + 1]
    c_node = en[idx]
    c_col = ec[idx]
    c_left = prefix[idx] + zstats[gi]
    c_thr = (lo + hi) / 2.0
    c_thr = np.where(c_thr >= hi, lo, c_thr)

    zg = np.flatnonzero(has_zero & varying)
    if zg.size:
        zthr = g_min[zg] / 2.0
        zthr = np.where(zthr >= g_min[zg], 0.0, zthr)
        c_node = np.r_[c_node, g_node[zg]]
        c_col = np.r_[c_col, g_col[zg]]
        c_left = np.vstack([c_left, zstats[zg]])
        c_thr = np.r_[c_thr, zthr]
    if not c_node.size:
        return best_feat, best_thr

    c_right = totals[c_node] - c_left
    ok = (c_left[:, 0] >= min_leaf) & (c_right[:, 0] >= min_leaf)
    ok &= (_node_weight(c_left, criterion) > 0) & (_node_weight(c_right, criterion) > 0)
    c_node, c_col, c_thr = c_node[ok], c_col[ok], c_thr[ok]
    if not c_node.size:
        return best_feat, best_thr
    score = _proxy(c_left[ok], criterion) + _proxy(c_right[ok], criterion)

    best = np.full(n_local, -np.inf)
    np.maximum.at(best, c_node, score)
    tol = _REL_TOL * np.maximum(1.0, np.abs(best))
    q = np.flatnonzero(score >= best[c_node] - tol[c_node])
    # ties: lowest feature index, then lowest threshold
    q = q[np.lexsort((c_thr[q], c_col[q], c_node[q]))]
    uniq, first = np.unique(c_node[q], return_index=True)
    parent = _proxy(totals[uniq], criterion)
    gain_ok = best[uniq] - parent > tol[uniq]
    uniq, pick = uniq[gain_ok], q[first[gain_ok]]
    best_feat[uniq] = c_col[pick]
    best_thr[uniq] = c_thr[pick]
    return best_feat, best_thr


def grow_tree(X, entries: _Entries, stats: np.ndarray, criterion: str, max_depth: int,
              min_samples_leaf: int, rng=None, max_features: int | None = None):
    """Grow one tree breadth-first.

    ``stats`` columns: [row multiplicity, criterion sums...].  Returns the tree
    in preorder and the leaf index of every row (-1 for zero-multiplicity rows).
    """
    node_of_row = np.where(stats[:, 0] > 0, 0, -1).astype(np.int64)
    d = entries.n_features

    feature, threshold, left, right = [-1], [0.0], [-1], [-1]
    value, impurity, weight, n_samples = [None], [0.0], [0.0], [0]

    er, ec, ev = entries.rows, entries.cols, entries.vals
    keep = node_of_row[er] >= 0
    er, ec, ev = er[keep], ec[keep], ev[keep]

    frontier = np.array([0], dtype=np.int64)
    for depth in range(max_depth + 1):
        m = frontier.size
        lookup = np.full(len(feature), -1, dtype=np.int64)
        lookup[frontier] = np.arange(m)
        local = np.where(node_of_row >= 0, lookup[np.maximum(node_of_row, 0)], -1)
        member = local >= 0
        lm = local[member]
        totals = np.column_stack([np.bincount(lm, weights=stats[member, j], minlength=m)
                                  for j in range(stats.shape[1])])
        node_rows = np.bincount(lm, minlength=m)
        imp = _impurity(totals, criterion)
        wts = _node_weight(totals, criterion)
        for i, node in enumerate(frontier):
            value[node] = totals[i, 1:3].copy()
            impurity[node] = float(imp[i])
            weight[node] = float(wts[i])
            n_samples[node] = int(round(totals[i, 0]))
        if depth == max_depth:
            break
        splittable = (totals[:, 0] >= 2 * min_samples_leaf) & (imp > 0)
        if not splittable.any():
            break

        en = local[er]
        keep = en >= 0
        keep[keep] = splittable[en[keep]]
        er, ec, ev, en = er[keep], ec[keep], ev[keep], en[keep]
        order = np.argsort(en, kind="stable")
        er, ec, ev, en = er[order], ec[order], ev[order], en[order]

        bf, bt = _best_splits(er, ec, ev, en, entries.dense, d, m, stats, totals, node_rows,
                              criterion, min_samples_leaf, rng, max_features)
        split_local = np.flatnonzero(bf >= 0)
        if not split_local.size:
            break
        child_of = np.full((m, 2), -1, dtype=np.int64)
        for i in split_local:
            node = frontier[i]
            feature[node] = int(bf[i])
            threshold[node] = float(bt[i])
            for side, store in ((0, left), (1, right)):
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(None)
                impurity.append(0.0)
                weight.append(0.0)
                n_samples.append(0)
                child_of[i, side] = store[node] = len(feature) - 1
        rows = np.flatnonzero(member)
        rows = rows[bf[local[rows]] >= 0]
        li = local[rows]
        go_left = column_values(X, rows, bf[li]) <= bt[li]
        node_of_row[rows] = np.where(go_left, child_of[li, 0], child_of[li, 1])
        frontier = child_of[split_local].ravel()

    # renumber breadth-first ids into preorder
    order, stack = [], [0]
    while stack:
        node = stack.pop()
        order.append(node)
        if feature[node] >= 0:
            stack.append(right[node])
            stack.append(left[node])
    new_id = np.empty(len(order), dtype=np.int64)
    new_id[order] = np.arange(len(order))
    order = np.array(order, dtype=np.int64)

    def remap(ids):
        ids = np.array(ids, dtype=np.int64)[order]
        return np.where(ids >= 0, new_id[np.maximum(ids, 0)], -1)

    tree = Tree(
        feature=np.array(feature, dtype=np.int64)[order],
        threshold=np.array(threshold, dtype=np.float64)[order],
        left=remap(left),
        right=remap(right),
        value=np.array(value, dtype=np.float64)[order],
        impurity=np.array(impurity, dtype=np.float64)[order],
        weight=np.array(weight, dtype=np.float64)[order],
        n_samples=np.array(n_samples, dtype=np.int64)[order],
    )
    leaf_of_row = np.where(node_of_row >= 0, new_id[np.maximum(node_of_row, 0)], -1)
    return tree, leaf_of_row



# ---------------------------------------------------------------------------
# fitted models


@dataclass(frozen=True)
class FittedLearner:
    kind: str
    trees: tuple[Tree, ...]
    feature_count: int
    params: LearnerParams
    tree_weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    init: float = 0.0

    def _check(self, X):
        X = as_matrix(X)
        if X.shape[1] != self.feature_count:
            raise DimensionMismatch(f"expected {self.feature_count} features, got {X.shape[1]}")
        return X

    def decision_function(self, X) -> np.ndarray:
        """Gradient boosting log-odds of the bot class."""
        X = self._check(X)
        score = np.full(X.shape[0], self.init)
        for tree in self.trees:
            score = score + tree.value[tree.apply(X), 0]
        return score

    def staged_decision(self, X) -> Iterator[np.ndarray]:
        X = self._check(X)
        score = np.full(X.shape[0], self.init)
        yield score
        for tree in self.trees:
            score = score + tree.value[tree.apply(X), 0]
            yield score

    def predict_proba(self, X) -> np.ndarray:
        """(n, 2) array of (p_bot, p_human)."""
        X = self._check(X)
        n = X.shape[0]
        if self.kind in (DECISION_TREE, RANDOM_FOREST):
            p_bot = np.zeros(n)
            for tree in self.trees:
                counts = tree.value[tree.apply(X)]
                p_bot = p_bot + counts[:, 0] / (counts[:, 0] + counts[:, 1])
            p_bot = p_bot / len(self.trees)
        elif self.kind == GRADIENT_BOOSTING:
            p_bot = expit(self.decision_function(X))
        else:
            margin = np.zeros(n)
            total = float(np.sum(self.tree_weights))
            for tree, alpha in zip(self.trees, self.tree_weights):
                counts = tree.value[tree.apply(X)]
                vote = np.where(counts[:, 0] > counts[:, 1], 1.0, -1.0)
                margin = margin + alpha * vote
            if total > 0:
                margin = margin / total
            p_bot = expit(margin)
        p_bot = np.clip(p_bot, 0.0, 1.0)
        return np.column_stack([p_bot, 1.0 - p_bot])

    def predict(self, X) -> np.ndarray:
        """1 = bot, 0 = human; ties go to human."""
        proba = self.predict_proba(X)
        return (proba[:, 0] > proba[:, 1]).astype(np.int64)


def _prepare(X, y):
    X = as_matrix(X)
    y = encode_labels(y)
    if X.shape[0] == 0 or y.size == 0:
        raise EmptyTrainingSet("no training samples")
    if X.shape[0] != y.size:
        raise InconsistentDimensions(f"{X.shape[0]} feature rows but {y.size} labels")
    if not sp.issparse(X) and not np.all(np.isfinite(X)):
        raise InconsistentDimensions("feature matrix contains NaN or infinite values")
    return X, y


def _class_stats(y: np.ndarray, w: np.ndarray, count: np.ndarray) -> np.ndarray:
    return np.column_stack([count, w * (y == 1), w * (y == 0)]).astype(np.float64)


def fit_decision_tree(X, y, params: LearnerParams | None = None) -> FittedLearner:
    params = params or LearnerParams.defaults(DECISION_TREE)
    X, y = _prepare(X, y)
    ones = np.ones(y.size)
    tree, _ = grow_tree(X, _Entries.from_matrix(X), _class_stats(y, ones, ones), GINI,
                        params.max_depth, params.min_samples_leaf)
    return FittedLearner(DECISION_TREE, (tree,), X.shape[1], replace(params, kind=DECISION_TREE))


def _forest_tree(X, entries, y, params: LearnerParams, index: int) -> Tree:
    rng = np.random.default_rng([params.seed, index])
    n, d = X.shape
    if params.bootstrap:
        mult = np.bincount(rng.integers(0, n, n), minlength=n).astype(np.float64)
    else:
        mult = np.ones(n)
    max_features = math.ceil(math.sqrt(d)) if params.feature_subsample == "sqrt" else None
    tree, _ = grow_tree(X, entries, _class_stats(y, mult, mult), GINI, params.max_depth,
                        params.min_samples_leaf, rng=rng, max_features=max_features)
    return tree


def fit_random_forest(X, y, params: LearnerParams | None = None, workers: int = 1) -> FittedLearner:
    params = params or LearnerParams.defaults(RANDOM_FOREST)
    X, y = _prepare(X, y)
    entries = _Entries.from_matrix(X)
    n_trees = max(1, params.n_estimators)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trees = list(pool.map(lambda i: _forest_tree(X, entries, y, params, i), range(n_trees)))
    else:
        trees = [_forest_tree(X, entries, y, params, i) for i in range(n_trees)]
    return FittedLearner(RANDOM_FOREST, tuple(trees), X.shape[1], replace(params, kind=RANDOM_FOREST))


def fit_gradient_boosting(X, y, params: LearnerParams | None = None) -> FittedLearner:
    params = params or LearnerParams.defaults(GRADIENT_BOOSTING)
    X, y = _prepare(X, y)
    n_bot = int(y.sum())
    n_human = y.size - n_bot
    if n_bot == 0 or n_human == 0:
        raise SingleClassTraining("gradient boosting needs both classes (initial log-odds undefined)")
    init = math.log(n_bot / n_human)
    entries = _Entries.from_matrix(X)
    score = np.full(y.size, init)
    ones = np.ones(y.size)
    trees = []
    for _ in range(params.n_estimators):
        p = expit(score)
        resid = y - p
        stats = np.column_stack([ones, ones, resid, resid * resid])
        tree, leaf = grow_tree(X, entries, stats, MSE, params.max_depth, params.min_samples_leaf)
        num = np.bincount(leaf, weights=resid, minlength=tree.node_count)
        den = np.bincount(leaf, weights=p * (1.0 - p), minlength=tree.node_count)
        step = num / np.maximum(den, NEWTON_EPS)
        values = np.zeros((tree.node_count, 2))
        is_leaf = tree.feature < 0
        values[is_leaf, 0] = params.learning_rate * step[is_leaf]
        tree = replace(tree, value=values)
        score = score + values[leaf, 0]
        trees.append(tree)
    return FittedLearner(GRADIENT_BOOSTING, tuple(trees), X.shape[1],
                         replace(params, kind=GRADIENT_BOOSTING), init=init)


def fit_adaboost(X, y, params: LearnerParams | None = None) -> FittedLearner:
    """Discrete two-class AdaBoost (SAMME) over weighted-Gini stumps."""
    params = params or LearnerParams.defaults(ADA_BOOST)
    X, y = _prepare(X, y)
    if y.min() == y.max():
        raise SingleClassTraining("AdaBoost needs both classes")
    entries = _Entries.from_matrix(X)
    n = y.size
    w = np.full(n, 1.0 / n)
    ones = np.ones(n)
    trees, alphas = [], []
    for _ in range(params.n_estimators):
        tree, leaf = grow_tree(X, entries, _class_stats(y, w, ones), GINI, params.max_depth,
                               params.min_samples_leaf)
        counts = tree.value[leaf]
        pred = (counts[:, 0] > counts[:, 1]).astype(np.int64)
        wrong = pred != y
        err = float(np.sum(w[wrong]) / np.sum(w))
        if err >= 0.5 - 1e-12:
            break
        if err <= 0.0:
            # a perfect stump ends boosting; its weight only matters relative to the others
            trees.append(tree)
            alphas.append(1.0 + sum(alphas))
            break
        alpha = math.log((1.0 - err) / err)
        trees.append(tree)
        alphas.append(alpha)
        w = w * np.exp(alpha * wrong)
        w = w / w.sum()
    return FittedLearner(ADA_BOOST, tuple(trees), X.shape[1], replace(params, kind=ADA_BOOST),
                         tree_weights=np.array(alphas, dtype=np.float64))


def fit_learner(kind: str, X, y, params: LearnerParams | None = None, workers: int = 1) -> FittedLearner:
    params = params if params is not None else LearnerParams.defaults(kind)
    if kind == DECISION_TREE:
        return fit_decision_tree(X, y, params)
    if kind == RANDOM_FOREST:
        return fit_random_forest(X, y, params, workers=workers)
    if kind == GRADIENT_BOOSTING:
        return fit_gradient_boosting(X, y, params)
    if kind == ADA_BOOST:
        return fit_adaboost(X, y, params)
    raise ValueError(f"unknown learner kind {kind!r}")


def predict_proba(model: FittedLearner, x) -> np.ndarray:
    """Probability tuple(s) for a single feature vector or a matrix."""
    X = as_matrix(x)
    out = model.predict_proba(X)
    return out[0] if (not sp.issparse(x) and np.ndim(x) == 1) else out


def gini_of_counts(counts: Sequence[float]) -> float:
    total = float(sum(counts))
    if total == 0:
        return 0.0
    return 1.0 - sum((c / total) ** 2 for c in counts)
