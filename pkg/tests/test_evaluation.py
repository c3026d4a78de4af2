import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multibot.errors import EmptyInput, LengthMismatch, SingleClassDataset, TooFewPerClass
from multibot.evaluation import (
    EvalMode,
    compute_metrics,
    evaluate,
    stratified_kfold,
    stratified_kfold_indices,
    stratified_split,
)
from multibot.records import Label, UserRecord

from oracles import metrics as oracle_metrics


def labeled(n_bot, n_human):
    return [UserRecord(f"u{i}", label=Label.BOT if i < n_bot else Label.HUMAN, username="x")
            for i in range(n_bot + n_human)]


def counts(records):
    return sum(r.label is Label.BOT for r in records), sum(r.label is Label.HUMAN for r in records)


def test_split_examples():
    tr, te = stratified_split(labeled(10, 10), 0.8, seed=1)
    assert counts(tr) == (8, 8) and counts(te) == (2, 2)
    tr, te = stratified_split(labeled(5, 5), 0.8, seed=1)
    assert counts(tr) == (4, 4)
    assert stratified_split(labeled(7, 9), seed=3) == stratified_split(labeled(7, 9), seed=3)
    with pytest.raises(SingleClassDataset):
        stratified_split(labeled(5, 0))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.floats(0.05, 0.95), st.integers(0, 10 ** 6))
def test_split_proportions(nb, nh, ratio, seed):
    data = labeled(nb, nh)
    tr, te = stratified_split(data, ratio, seed)
    b, h = counts(tr)
    assert abs(b - ratio * nb) <= 0.5 and abs(h - ratio * nh) <= 0.5
    assert sorted(r.user_id for r in tr + te) == sorted(r.user_id for r in data)


def test_kfold_examples():
    folds = stratified_kfold(labeled(10, 10), 5, seed=0)
    assert [counts(f) for f in folds] == [(2, 2)] * 5
    with pytest.raises(TooFewPerClass):
        stratified_kfold(labeled(4, 10), 5)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6).flatmap(lambda k: st.tuples(st.just(k), st.integers(k, 40), st.integers(k, 40))),
       st.integers(0, 1000))
def test_kfold_partition(params, seed):
    k, nb, nh = params
    y = np.array([1] * nb + [0] * nh)
    folds = stratified_kfold_indices(y, k, seed)
    allidx = np.concatenate(folds)
    assert sorted(allidx) == list(range(nb + nh))
    bots = [int(y[f].sum()) for f in folds]
    humans = [len(f) - b for f, b in zip(folds, bots)]
    assert max(bots) - min(bots) <= 1 and max(humans) - min(humans) <= 1
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


def test_metrics_examples():
    m = compute_metrics(["bot", "human"], ["bot", "human"])
    assert m.accuracy == 100 and m.macro_f1 == 100
    m = compute_metrics(["bot"] * 3, ["human"] * 3)
    assert m.accuracy == 0 and m.macro_f1 == 0
    m = compute_metrics(["bot", "human", "human", "human"], ["bot", "bot", "human", "human"])
    assert m.accuracy == 75
    assert m.macro_f1 == pytest.approx(100 * (2 / 3 + 0.8) / 2)
    assert m.macro_f1 == pytest.approx(73.33, abs=0.01)
    assert m.confusion == ((1, 1), (0, 2))


def test_metrics_errors():
    with pytest.raises(LengthMismatch):
        compute_metrics(["bot"], ["bot", "human"])
    with pytest.raises(EmptyInput):
        compute_metrics([], [])


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 30).flatmap(lambda n: st.tuples(
    st.lists(st.sampled_from(["bot", "human"]), min_size=n, max_size=n),
    st.lists(st.sampled_from(["bot", "human"]), min_size=n, max_size=n))))
def test_metrics_match_oracle(pair):
    preds, truth = pair
    m = compute_metrics(preds, truth)
    acc, micro, macro, c = oracle_metrics(preds, truth)
    assert m.accuracy == float(100 * acc)
    assert m.micro_f1 == float(100 * micro)
    assert m.macro_f1 == float(100 * macro)
    assert m.confusion == ((c["bot", "bot"], c["bot", "human"]), (c["human", "bot"], c["human", "human"]))
    assert sum(map(sum, m.confusion)) == len(preds)


def test_mode_parsing():
    assert EvalMode.parse("processed") is EvalMode.PROCESSED_ONLY
    assert EvalMode.parse("overall") is EvalMode.UNPROCESSED_AS_HUMAN
    assert EvalMode.parse("full-fields") is EvalMode.FULL_FIELDS_ONLY
    assert EvalMode.parse("full_fields_only") is EvalMode.FULL_FIELDS_ONLY


def test_evaluate_modes(small_model, small_synth):
    data = small_synth[:80]
    proc = evaluate(small_model, data, "processed")
    overall = evaluate(small_model, data, "overall")
    assert proc.pct_processed == overall.pct_processed == 100
    assert proc.accuracy_overall == overall.accuracy_overall
    assert sum(map(sum, overall.confusion)) == overall.n_evaluated == 80


def test_evaluate_unprocessed_counted_as_human(small_model):
    data = [UserRecord("a", label=Label.BOT), UserRecord("b", label=Label.HUMAN)]
    rep = evaluate(small_model, data, EvalMode.UNPROCESSED_AS_HUMAN)
    assert rep.pct_processed == 100 and rep.accuracy_overall == 50
    rep = evaluate(small_model, data, EvalMode.PROCESSED_ONLY)
    assert rep.pct_processed == 0 and rep.accuracy_overall is None


def test_full_fields_none_available(small_model, small_synth):
    reddit = [r for r in small_synth if r.platform.family == "reddit"]
    rep = evaluate(small_model, reddit, EvalMode.FULL_FIELDS_ONLY)
    assert rep.pct_processed == 0 and rep.accuracy_overall is None
    assert rep.cell() == "NA (0)"


def test_full_fields_subset(small_model, small_synth):
    rep = evaluate(small_model, small_synth, "full-fields")
    full = sum(r.platform.family == "twitter" for r in small_synth)
    assert rep.n_evaluated == full
    assert rep.pct_processed == pytest.approx(100 * full / len(small_synth))
