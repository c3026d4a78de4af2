import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from multibot.ensemble import FIELDS, field_present
from multibot.errors import InvalidConfig
from multibot.records import Label, manifest_from_dict
from multibot.synth import SynthConfig, generate, write_dataset, write_ndjson


def test_exact_bot_count():
    recs = generate(SynthConfig(n_users=100, bot_fraction=0.5, seed=1))
    assert sum(r.label is Label.BOT for r in recs) == 50


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 300), st.floats(0, 1), st.integers(0, 99))
def test_label_balance_exact(n, frac, seed):
    recs = generate(SynthConfig(n_users=n, bot_fraction=frac, seed=seed, posts_per_user=(0, 1)))
    assert sum(r.label is Label.BOT for r in recs) == math.floor(n * frac + 0.5)


def test_full_dropout_removes_posts():
    recs = generate(SynthConfig(n_users=200, dropout={"posts": 1.0}, seed=3))
    assert all(r.posts is None for r in recs)


def test_same_seed_same_bytes(tmp_path):
    cfg = SynthConfig(n_users=50, seed=9, platform_mix={"twitter_v2": 1, "reddit_pushshift": 1})
    write_ndjson(generate(cfg), tmp_path / "a.jsonl")
    write_ndjson(generate(cfg), tmp_path / "b.jsonl")
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_presence_rate_within_three_sigma():
    n, rate = 3000, 0.3
    recs = generate(SynthConfig(n_users=n, dropout={f: rate for f in FIELDS}, seed=4, posts_per_user=(1, 2)))
    sigma = math.sqrt(n * rate * (1 - rate))
    for f in FIELDS:
        present = sum(field_present(r, f) for r in recs)
        assert abs(present - n * (1 - rate)) <= 3 * sigma, f


def test_platform_field_availability():
    recs = generate(SynthConfig(n_users=200, seed=5, platform_mix={"reddit_pushshift": 1,
                                                                   "instagram_crowdtangle": 1}))
    for r in recs:
        if r.platform.family == "reddit":
            assert r.screenname is None and r.description is None and r.metadata is None
        else:
            assert r.posts is None


def test_invalid_configs():
    for bad in (dict(bot_fraction=1.5), dict(n_users=-1), dict(regime="chaotic"),
                dict(dropout={"posts": 2.0}), dict(dropout={"avatar": 0.1}),
                dict(platform_mix={"myspace": 1.0}), dict(platform_mix={})):
        with pytest.raises(InvalidConfig):
            generate(SynthConfig(**bad))


def test_written_dataset_reads_back(tmp_path):
    cfg = write_dataset(SynthConfig(n_users=60, seed=6, platform_mix={"twitter_v2": 1, "reddit_pushshift": 1}),
                        tmp_path)
    originals = {r.user_id: r for r in generate(SynthConfig(n_users=60, seed=6, platform_mix={
        "twitter_v2": 1, "reddit_pushshift": 1}))}
    total = 0
    for entry in cfg["datasets"]:
        m = manifest_from_dict(entry, tmp_path)
        recs = m.load()
        total += len(recs)
        for r in recs:
            o = originals[r.user_id]
            assert (r.username, r.description, r.metadata, r.posts, r.label) == \
                (o.username, o.description, o.metadata, o.posts, o.label)
            assert r.platform is o.platform
    assert total == 60
    assert json.loads((tmp_path / "config.json").read_text())["seed"] == 6


def test_overlap_regime_mixes_classes():
    trivial = generate(SynthConfig(n_users=400, seed=7))
    overlap = generate(SynthConfig(n_users=400, seed=7, regime="overlapping"))

    def human_style_names(recs, label):
        # all-lowercase names come almost only from the dictionary-word generator
        return sum(r.username.islower() for r in recs if r.label is label)

    assert human_style_names(trivial, Label.BOT) < human_style_names(overlap, Label.BOT)
