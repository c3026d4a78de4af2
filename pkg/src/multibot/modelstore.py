"""Single-file model container: a diff-able text header followed by a canonical JSON body.

Layout (UTF-8, ``\\n`` line endings)::

    MULTIBOT-MODEL
    format_version: 0.1
    created_at: <ISO timestamp or "none">
    training_seed: <int>
    select.<field>: <learner kind>[ flagged][ fallback]
    body_bytes: <length of the body in bytes>
    body_sha256: <hex digest of the body>
    ---
    <body: one line of JSON, compact separators, fixed key order>

Floats in the body are written with Python's shortest round-trip repr, so a
loaded model reproduces every prediction bit for bit.  Trees are stored in
preorder with explicit integer child indices.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from typing import Any, BinaryIO

import numpy as np

from .calibration import CalibratedMember, FieldClassifier
from .ensemble import FIELDS, FORMAT_VERSION, EnsembleModel, FeatureSpace, SelectionRow
from .errors import CorruptModel, ModelIOError, ParseError, VersionMismatch
from .features import NameCharTable, TfidfConfig, TfidfModel
from .learners import (
    ADA_BOOST,
    DECISION_TREE,
    GRADIENT_BOOSTING,
    LEARNER_KINDS,
    RANDOM_FOREST,
    FittedLearner,
    LearnerParams,
    Tree,
)

MAGIC = "MULTIBOT-MODEL"
TREE_ARRAYS = ("feature", "threshold", "left", "right", "value", "impurity", "weight", "n_samples")


# ---------------------------------------------------------------------------
# encoding


def _tree_payload(t: Tree) -> dict:
    return {name: getattr(t, name).tolist() for name in TREE_ARRAYS}


def _learner_payload(m: FittedLearner) -> dict:
    return {
        "kind": m.kind,
        "feature_count": m.feature_count,
        "params": m.params.to_dict(),
        "init": float(m.init),
        "tree_weights": [float(w) for w in m.tree_weights],
        "trees": [_tree_payload(t) for t in m.trees],
    }


def _tfidf_payload(t: TfidfModel) -> dict:
    return {
        "config": {"max_features": t.config.max_features, "min_df": t.config.min_df,
                   "min_token_len": t.config.min_token_len},
        "terms": t.terms,
        "idf": [float(v) for v in t.idf],
    }


def _classifier_payload(fc: FieldClassifier) -> dict:
    return {
        "field": fc.field,
        "kind": fc.kind,
        "feature_names": list(fc.feature_names),
        "prior": float(fc.prior),
        "flags": list(fc.flags),
        "members": [{"a": float(m.a), "b": float(m.b), "learner": _learner_payload(m.learner)}
                    for m in fc.members],
    }


def _payload(m: EnsembleModel) -> dict:
    table = m.features.char_table
    return {
        "format_version": m.format_version,
        "training_seed": m.training_seed,
        "created_at": m.created_at,
        "char_table": {
            "version": table.version,
            "total_chars": table.total_chars,
            "chars": [[ord(c), table.probs[c]] for c in sorted(table.probs)],
        },
        "desc_tfidf": _tfidf_payload(m.features.desc_tfidf),
        "posts_tfidf": _tfidf_payload(m.features.posts_tfidf),
        "learner_params": {k: dict(m.learner_params[k]) for k in LEARNER_KINDS if k in m.learner_params},
        "selection_report": [
            {"field": r.field, "kind": r.kind, "flagged": r.flagged, "fallback": r.fallback,
             "notes": list(r.notes),
             "accuracies": {k: {key: r.accuracies[k][key] for key in r.accuracies[k]} for k in r.accuracies}}
            for r in m.selection_report
        ],
        "classifiers": [_classifier_payload(m.classifiers[f]) for f in FIELDS],
    }


def encode_model(m: EnsembleModel) -> bytes:
    try:
        body = json.dumps(_payload(m), separators=(",", ":"), ensure_ascii=True, allow_nan=False).encode()
    except ValueError as exc:
        raise CorruptModel(f"model holds a non-finite number: {exc}") from exc
    header = [MAGIC, f"format_version: {m.format_version}",
              f"created_at: {m.created_at or 'none'}", f"training_seed: {m.training_seed}"]
    for row in m.selection_report:
        tags = "".join([" flagged" if row.flagged else "", " fallback" if row.fallback else ""])
        header.append(f"select.{row.field}: {row.kind}{tags}")
    header += [f"body_bytes: {len(body)}", f"body_sha256: {hashlib.sha256(body).hexdigest()}", "---"]
    return ("\n".join(header) + "\n").encode() + body + b"\n"


def save_model(m: EnsembleModel, sink: str | os.PathLike | BinaryIO) -> int:
    """Write ``m`` to a path or binary file object; returns the byte count."""
    data = encode_model(m)
    try:
        if hasattr(sink, "write"):
            sink.write(data)
        else:
            with open(sink, "wb") as fh:
                fh.write(data)
    except OSError as exc:
        raise ModelIOError(f"cannot write model: {exc}") from exc
    return len(data)


# ---------------------------------------------------------------------------
# decoding and validation


def _need(obj: Any, key: str, kind: type | tuple, path: str):
    if not isinstance(obj, dict) or key not in obj:
        raise CorruptModel(f"missing '{key}'", path)
    value = obj[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise CorruptModel(f"'{key}' has the wrong type", path)
    if isinstance(value, float) and not math.isfinite(value):
        raise CorruptModel(f"'{key}' is not finite", path)
    return value


def _decode_tree(obj: dict, feature_count: int, regression: bool, path: str) -> Tree:
    arrays = {}
    for name in TREE_ARRAYS:
        raw = _need(obj, name, list, path)
        try:
            dtype = np.int64 if name in ("feature", "left", "right", "n_samples") else np.float64
            arrays[name] = np.array(raw, dtype=dtype)
        except (TypeError, ValueError):
            raise CorruptModel(f"'{name}' is not numeric", path) from None
    n = arrays["feature"].size
    if n == 0:
        raise CorruptModel("tree has no nodes", path)
    for name in TREE_ARRAYS:
        if arrays[name].shape[0] != n:
            raise CorruptModel(f"'{name}' has {arrays[name].shape[0]} entries, expected {n}", path)
    if arrays["value"].shape != (n, 2):
        raise CorruptModel("'value' must hold two numbers per node", path)
    for name in ("threshold", "value", "impurity", "weight"):
        if not np.all(np.isfinite(arrays[name])):
            raise CorruptModel(f"'{name}' contains non-finite numbers", path)
    feat, left, right = arrays["feature"], arrays["left"], arrays["right"]
    if np.any(feat < -1) or np.any(feat >= feature_count):
        raise CorruptModel("feature index out of range", path)
    # preorder: every internal node's left child follows it immediately
    order, stack = [], [0]
    while stack:
        i = stack.pop()
        if len(order) > n:
            raise CorruptModel("child references form a cycle", path)
        order.append(i)
        if feat[i] >= 0:
            if not (0 <= left[i] < n and 0 <= right[i] < n) or left[i] != i + 1 or right[i] <= left[i]:
                raise CorruptModel(f"node {i} has invalid child references", f"{path}/nodes[{i}]")
            stack.append(int(right[i]))
            stack.append(int(left[i]))
        elif left[i] != -1 or right[i] != -1:
            raise CorruptModel(f"leaf {i} has child references", f"{path}/nodes[{i}]")
    if order != list(range(n)):
        raise CorruptModel("nodes are not stored in preorder", path)
    if not regression:
        leaves = feat < 0
        vals = arrays["value"][leaves]
        if np.any(vals < 0) or np.any(vals.sum(axis=1) <= 0):
            raise CorruptModel("leaf class weights must be non-negative with a positive total", path)
    return Tree(**arrays)


def _decode_params(obj: dict, path: str) -> LearnerParams:
    try:
        return LearnerParams(
            kind=_need(obj, "kind", str, path),
            max_depth=_need(obj, "max_depth", int, path),
            n_estimators=_need(obj, "n_estimators", int, path),
            min_samples_leaf=_need(obj, "min_samples_leaf", int, path),
            learning_rate=_need(obj, "learning_rate", float, path),
            feature_subsample=_need(obj, "feature_subsample", str, path),
            bootstrap=_need(obj, "bootstrap", bool, path),
            seed=_need(obj, "seed", int, path),
        )
    except ValueError as exc:
        raise CorruptModel(str(exc), path) from None


def _decode_learner(obj: dict, path: str) -> FittedLearner:
    kind = _need(obj, "kind", str, path)
    if kind not in LEARNER_KINDS:
        raise CorruptModel(f"unknown learner kind {kind!r}", path)
    feature_count = _need(obj, "feature_count", int, path)
    params = _decode_params(_need(obj, "params", dict, path), f"{path}/params")
    trees_raw = _need(obj, "trees", list, path)
    trees = tuple(_decode_tree(t, feature_count, kind == GRADIENT_BOOSTING, f"{path}/trees[{i}]")
                  for i, t in enumerate(trees_raw))
    weights = np.array([float(w) for w in _need(obj, "tree_weights", list, path)], dtype=np.float64)
    if kind in (DECISION_TREE, RANDOM_FOREST) and not trees:
        raise CorruptModel("tree model without trees", path)
    if kind == ADA_BOOST and weights.size != len(trees):
        raise CorruptModel("AdaBoost needs one weight per stump", path)
    if weights.size and (not np.all(np.isfinite(weights)) or np.any(weights <= 0)):
        raise CorruptModel("stage weights must be positive", path)
    return FittedLearner(kind, trees, feature_count, params, tree_weights=weights,
                         init=_need(obj, "init", float, path))


def _decode_tfidf(obj: dict, path: str) -> TfidfModel:
    cfg = _need(obj, "config", dict, path)
    config = TfidfConfig(max_features=_need(cfg, "max_features", int, path),
                         min_df=_need(cfg, "min_df", int, path),
                         min_token_len=_need(cfg, "min_token_len", int, path))
    terms = _need(obj, "terms", list, path)
    idf = np.array([float(v) for v in _need(obj, "idf", list, path)], dtype=np.float64)
    if len(set(terms)) != len(terms) or not all(isinstance(t, str) for t in terms):
        raise CorruptModel("vocabulary terms must be unique strings", path)
    if idf.size != len(terms):
        raise CorruptModel("idf length differs from vocabulary size", path)
    if np.any(~np.isfinite(idf)) or np.any(idf < 1.0):
        raise CorruptModel("idf weights must be finite and >= 1", path)
    return TfidfModel({t: i for i, t in enumerate(terms)}, idf, config)


def decode_model(data: bytes) -> EnsembleModel:
    head, sep, rest = data.partition(b"\n---\n")
    if not sep:
        raise CorruptModel("missing header separator", "header")
    try:
        lines = head.decode("utf-8").split("\n")
    except UnicodeDecodeError:
        raise CorruptModel("header is not UTF-8", "header") from None
    if lines[0] != MAGIC:
        raise CorruptModel("not a multibot model file", "header")
    header = dict(line.split(": ", 1) for line in lines[1:] if ": " in line)
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format {version!r} is not supported (expected {FORMAT_VERSION})")
    body = rest[:-1] if rest.endswith(b"\n") else rest
    try:
        expected = int(header["body_bytes"])
    except (KeyError, ValueError):
        raise CorruptModel("missing body_bytes", "header") from None
    if len(body) != expected:
        raise CorruptModel(f"body has {len(body)} bytes, header says {expected}", "body")
    if hashlib.sha256(body).hexdigest() != header.get("body_sha256"):
        raise CorruptModel("body checksum mismatch", "body")
    try:
        payload = json.loads(body)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"body is not valid JSON: {exc}", "body") from None
    return _decode_payload(payload)


def _decode_payload(p: dict) -> EnsembleModel:
    if _need(p, "format_version", str, "body") != FORMAT_VERSION:
        raise VersionMismatch("body format_version differs from the supported version")
    ct = _need(p, "char_table", dict, "body")
    try:
        probs = {chr(int(code)): float(prob) for code, prob in _need(ct, "chars", list, "body/char_table")}
        table = NameCharTable(probs, _need(ct, "total_chars", int, "body/char_table"),
                              _need(ct, "version", str, "body/char_table"))
        table.validate()
    except (TypeError, ValueError, ParseError) as exc:
        raise CorruptModel(f"invalid character table: {exc}", "body/char_table") from None
    features = FeatureSpace(table, _decode_tfidf(_need(p, "desc_tfidf", dict, "body"), "body/desc_tfidf"),
                            _decode_tfidf(_need(p, "posts_tfidf", dict, "body"), "body/posts_tfidf"))

    classifiers = {}
    for i, c in enumerate(_need(p, "classifiers", list, "body")):
        path = f"body/classifiers[{i}]"
        fname = _need(c, "field", str, path)
        names = tuple(_need(c, "feature_names", list, path))
        if fname not in FIELDS or fname in classifiers:
            raise CorruptModel(f"unexpected or duplicate field {fname!r}", path)
        if names != features.feature_names(fname):
            raise CorruptModel("feature schema does not match the embedded vocabularies", path)
        members = []
        for j, m in enumerate(_need(c, "members", list, path)):
            mpath = f"{path}/members[{j}]"
            learner = _decode_learner(_need(m, "learner", dict, mpath), f"{mpath}/learner")
            if learner.feature_count != len(names):
                raise CorruptModel("learner feature count differs from the field schema", mpath)
            members.append(CalibratedMember(learner, _need(m, "a", float, mpath), _need(m, "b", float, mpath)))
        prior = _need(c, "prior", float, path)
        if not 0.0 <= prior <= 1.0:
            raise CorruptModel("prior must lie in [0, 1]", path)
        classifiers[fname] = FieldClassifier(fname, _need(c, "kind", str, path), names, tuple(members),
                                             prior, tuple(_need(c, "flags", list, path)))
    missing = [f for f in FIELDS if f not in classifiers]
    if missing:
        raise CorruptModel(f"no classifier for {', '.join(missing)}", "body/classifiers")

    report = []
    for i, r in enumerate(_need(p, "selection_report", list, "body")):
        path = f"body/selection_report[{i}]"
        report.append(SelectionRow(_need(r, "field", str, path), _need(r, "kind", str, path),
                                   _need(r, "flagged", bool, path), _need(r, "fallback", bool, path),
                                   _need(r, "accuracies", dict, path), tuple(_need(r, "notes", list, path))))
    params = _need(p, "learner_params", dict, "body")
    created = p.get("created_at")
    if created is not None and not isinstance(created, str):
        raise CorruptModel("created_at must be a string or null", "body")
    return EnsembleModel(classifiers, features, tuple(report), _need(p, "training_seed", int, "body"),
                         FORMAT_VERSION, created, params)


def load_model(source: str | os.PathLike | BinaryIO | bytes) -> EnsembleModel:
    if isinstance(source, (bytes, bytearray)):
        return decode_model(bytes(source))
    try:
        if hasattr(source, "read"):
            data = source.read()
        else:
            with open(source, "rb") as fh:
                data = fh.read()
    except OSError as exc:
        raise ModelIOError(f"cannot read model: {exc}") from exc
    return decode_model(data)
