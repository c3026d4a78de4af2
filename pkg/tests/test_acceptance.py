"""Acceptance suite: one check per primary criterion, each printing a PASS/FAIL line.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import io
import json
import math
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import best_root_split, metrics as oracle_metrics, split_gini  # noqa: E402

from multibot.calibration import platt_apply, platt_fit  # noqa: E402
from multibot.ensemble import (  # noqa: E402
    FIELDS,
    TrainConfig,
    aggregate,
    field_present,
    predict_batch,
    prepare_training,
    select_field_models,
    train_ensemble,
)
from multibot.evaluation import EvalMode, compute_metrics, evaluate  # noqa: E402
from multibot.features import build_char_table, name_entropy  # noqa: E402
from multibot.learners import DECISION_TREE, LearnerParams, fit_decision_tree  # noqa: E402
from multibot.modelstore import load_model, save_model  # noqa: E402
from multibot.records import Label  # noqa: E402
from multibot.synth import SynthConfig, generate  # noqa: E402

OSOME_ENV = "MULTIBOT_OSOME_CONFIG"

_trivial_cache: dict = {}


def trivial_model():
    """Model trained on the trivial-regime synth set (n = 2000, 50% bots), with timing."""
    if not _trivial_cache:
        records = generate(SynthConfig(n_users=2000, bot_fraction=0.5, regime="trivial", seed=2024))
        config = TrainConfig(seed=2024, workers=1)
        start = time.perf_counter()
        model = train_ensemble([("trivial", records)], config)
        held_out = prepare_training([("trivial", records)], config).test
        report = evaluate(model, held_out, EvalMode.UNPROCESSED_AS_HUMAN, name="held-out")
        _trivial_cache.update(model=model, report=report, seconds=time.perf_counter() - start)
    return _trivial_cache


# ---------------------------------------------------------------------------
# criteria


def check_tree_oracle():
    rng = np.random.default_rng(12345)
    stump = LearnerParams(DECISION_TREE, max_depth=1, min_samples_leaf=1)
    start = time.perf_counter()
    mismatches = 0
    n_sets = 600
    for _ in range(n_sets):
        n, d = int(rng.integers(2, 13)), int(rng.integers(1, 4))
        X = rng.integers(0, 5, (n, d)).astype(float)
        if rng.random() < 0.5:
            X = np.round(rng.normal(size=(n, d)), 2)
        y = rng.integers(0, 2, n)
        tree = fit_decision_tree(X, y, stump).trees[0]
        rows, labels = X.tolist(), y.tolist()
        parent, cands = best_root_split(rows, labels)
        optimum = min([c[0] for c in cands] + [parent])
        if tree.feature[0] >= 0:
            achieved = split_gini(rows, labels, int(tree.feature[0]), Fraction(tree.threshold[0]))
        else:
            achieved = parent
        mismatches += achieved != optimum
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 10
    return ok, f"{n_sets} datasets, {mismatches} mismatches, {elapsed:.2f}s (limit 10s)"


def check_entropy_oracle():
    rng = np.random.default_rng(7)
    alphabet = list("abcdefghijXYZ0129_.#") + ["🙂", "é", "ß"]
    worst = 0.0
    for _ in range(1000):
        corpus = ["".join(rng.choice(alphabet, int(rng.integers(1, 10)))) for _ in range(int(rng.integers(1, 6)))]
        name = "".join(rng.choice(alphabet + ["Q", "~"], int(rng.integers(0, 15))))
        counts: dict[str, int] = {}
        for ch in "".join(corpus):
            counts[ch] = counts.get(ch, 0) + 1
        total = sum(counts.values())
        expected = 0.0
        for ch in name:
            p = counts.get(ch, 0) / total if ch in counts else 1 / (total + 1)
            expected += -p * math.log(p, 2)
        worst = max(worst, abs(name_entropy(name, build_char_table(corpus)) - expected))
    return worst <= 1e-9, f"1000 pairs, max |diff| = {worst:.2e} (tol 1e-9)"


def check_calibration():
    rng = np.random.default_rng(2000)
    n = 2000
    s = rng.uniform(0, 1, n)
    truth = 1 / (1 + np.exp(-(8 * s - 4)))
    y = (rng.random(n) < truth).astype(int)
    a, b = platt_fit(s, y)
    mace = float(np.mean(np.abs(platt_apply(s, a, b) - truth)))
    grid = platt_apply(np.linspace(0, 1, 1001), a, b)
    monotone = a < 0 and bool(np.all(np.diff(grid) > 0))
    return mace <= 0.05 and monotone, f"MACE = {mace:.4f} (limit 0.05), a = {a:.4f}, strictly monotone = {monotone}"


def check_aggregation():
    rng = np.random.default_rng(10000)
    failures = 0
    for _ in range(10000):
        per = {}
        for f in FIELDS:
            r = rng.random()
            if r < 0.3:
                per[f] = None
            elif r < 0.4:
                per[f] = (0.5, 0.5)
            else:
                p = float(rng.random())
                per[f] = (p, 1 - p)
        (bot, human), label, used = aggregate(per)
        present = [v for v in per.values() if v is not None]
        if not present:
            failures += (bot, human, label, used) != (0.0, 1.0, Label.HUMAN, 0)
            continue
        mean_bot = math.fsum(v[0] for v in present) / len(present)
        mean_human = math.fsum(v[1] for v in present) / len(present)
        failures += abs(bot - mean_bot) > 1e-12 or abs(human - mean_human) > 1e-12
        failures += abs(bot + human - 1) > 1e-9
        failures += label is not (Label.BOT if bot > human else Label.HUMAN)
        for f in FIELDS:
            if per[f] is None:
                continue
            reduced = {**per, f: None}
            rest = [v for g, v in reduced.items() if v is not None]
            (rb, _), _, rused = aggregate(reduced)
            if rest:
                failures += rused != len(rest) or abs(rb - math.fsum(v[0] for v in rest) / len(rest)) > 1e-12
    return failures == 0, f"10000 tuple sets, {failures} violations"


def check_missing_data():
    records = generate(SynthConfig(n_users=1000, seed=31, dropout={f: 0.3 for f in FIELDS},
                                   platform_mix={"twitter_v2": 2, "reddit_pushshift": 1,
                                                 "instagram_crowdtangle": 1}))
    model = train_ensemble([("dropout", records)], TrainConfig(seed=31, learner_overrides={
        "random_forest": {"n_estimators": 25}, "gradient_boosting": {"n_estimators": 30}}))
    preds = predict_batch(model, records)
    report = evaluate(model, records, EvalMode.UNPROCESSED_AS_HUMAN, predictions=preds)
    every = len(preds) == len(records) and all(p.user_id == r.user_id for p, r in zip(preds, records))
    no_data = sum(p.no_data for p in preds)
    ok = report.pct_processed == 100 and every
    return ok, (f"{len(records)} users, pct_processed = {report.pct_processed:.0f}, "
                f"predictions for all = {every}, no-field users = {no_data}")


def check_separability():
    cache = trivial_model()
    acc, secs = cache["report"].accuracy_overall, cache["seconds"]
    return acc >= 95 and secs < 120, f"held-out accuracy {acc:.2f}% (min 95), train+eval {secs:.1f}s (limit 120s)"


def check_speed():
    model = trivial_model()["model"]
    records = generate(SynthConfig(n_users=759, seed=759, bot_fraction=0.52))
    assert all(all(field_present(r, f) for f in FIELDS) for r in records)
    start = time.perf_counter()
    preds = predict_batch(model, records, workers=1)
    secs = time.perf_counter() - start
    target = "met" if secs < 5 else "missed"
    return len(preds) == 759 and secs < 234, f"759 full-field users in {secs:.3f}s (limit 234s, 5s target {target})"


def check_selection_rule():
    results = {"description": {
        "decision_tree": {"overall": 70.48, "reddit": None, "instagram": 64.0},
        "random_forest": {"overall": 74.0, "reddit": None, "instagram": 0.0},
        "gradient_boosting": {"overall": 81.59, "reddit": None, "instagram": 0.0},
        "ada_boost": {"overall": 66.0, "reddit": None, "instagram": 0.0},
    }}
    choice = select_field_models(results)["description"]
    return choice.kind == "decision_tree" and not choice.flagged, f"selected {choice.kind}"


def check_metrics_oracle():
    rng = np.random.default_rng(1000)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        preds = rng.choice(["bot", "human"], n).tolist()
        truth = rng.choice(["bot", "human"], n).tolist()
        m = compute_metrics(preds, truth)
        acc, micro, macro, c = oracle_metrics(preds, truth)
        conf = ((c["bot", "bot"], c["bot", "human"]), (c["human", "bot"], c["human", "human"]))
        bad += (m.accuracy, m.micro_f1, m.macro_f1, m.confusion) != (
            float(100 * acc), float(100 * micro), float(100 * macro), conf)
    return bad == 0, f"1000 label vectors, {bad} mismatches (exact equality)"


def check_serialization():
    model = trivial_model()["model"]
    buf1, buf2 = io.BytesIO(), io.BytesIO()
    save_model(model, buf1)
    save_model(model, buf2)
    same_bytes = buf1.getvalue() == buf2.getvalue()
    loaded = load_model(buf1.getvalue())
    records = generate(SynthConfig(n_users=1000, seed=99, regime="overlapping",
                                   dropout={f: 0.2 for f in FIELDS},
                                   platform_mix={"twitter_v2": 1, "reddit_pushshift": 1,
                                                 "instagram_crowdtangle": 1}))
    a = predict_batch(model, records)
    b = predict_batch(loaded, records)
    diffs = sum((p.per_field, p.aggregate, p.label) != (q.per_field, q.aggregate, q.label) for p, q in zip(a, b))
    return same_bytes and diffs == 0, f"1000 records, {diffs} differing predictions, double-save identical = {same_bytes}"


def check_osome():
    """Conditional: needs a config pointing at rehydrated OSOME datasets."""
    path = os.environ.get(OSOME_ENV)
    if not path:
        return None, f"skipped: set {OSOME_ENV} to a training config that includes the rehydrated datasets"
    from multibot.records import manifest_from_dict

    cfg = json.loads(Path(path).read_text())
    base = Path(path).parent
    datasets = [(e["name"], manifest_from_dict(e, base).load()) for e in cfg["datasets"]]
    model = train_ensemble(datasets, TrainConfig(seed=int(cfg.get("seed", 0))))
    targets = {"cresci-rtbust-2019": 71.65, "botwiki-2019": 91.60}
    found, ok, parts = dict(datasets), True, []
    for name, ref in targets.items():
        if name not in found:
            ok = False
            parts.append(f"{name} missing")
            continue
        acc = evaluate(model, found[name], EvalMode.UNPROCESSED_AS_HUMAN, name=name).accuracy_overall
        ok &= abs(acc - ref) <= 10
        parts.append(f"{name} {acc:.2f} (ref {ref} ± 10)")
    return ok, "; ".join(parts)


CRITERIA = [
    ("tree oracle", check_tree_oracle),
    ("entropy oracle", check_entropy_oracle),
    ("calibration quality", check_calibration),
    ("aggregation invariants", check_aggregation),
    ("missing-data totality", check_missing_data),
    ("separability ceiling", check_separability),
    ("prediction speed", check_speed),
    ("selection-rule fidelity", check_selection_rule),
    ("metrics oracle", check_metrics_oracle),
    ("serialization", check_serialization),
    ("OSOME reproduction (conditional)", check_osome),
]


def _line(name, ok, detail):
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    return f"ACCEPTANCE {status} {name}: {detail}"


@pytest.mark.parametrize("name,check", CRITERIA, ids=[c[0].split(" (")[0].replace(" ", "_") for c in CRITERIA])
def test_criterion(name, check, record_property):
    ok, detail = check()
    line = _line(name, ok, detail)
    print(line)
    record_property("acceptance", line)
    if ok is None:
        pytest.skip(detail)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for name, check in CRITERIA:
        ok, detail = check()
        failed += ok is False
        print(_line(name, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
