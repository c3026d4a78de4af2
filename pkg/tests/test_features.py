import math
import unicodedata
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multibot.errors import EmptyCorpus, EmptyVocabulary, ParseError
from multibot.features import (
    NameCharTable,
    TfidfConfig,
    build_char_table,
    char_classes,
    fit_tfidf,
    metadata_features,
    name_entropy,
    post_stats,
    posts_features,
    screenname_features,
    tfidf_transform,
    tokenize,
    username_features,
)
from multibot.records import MetadataFields, PostRecord


def brute_entropy(name, corpus):
    counts = Counter("".join(corpus))
    total = sum(counts.values())
    h = 0.0
    for ch in name:
        p = counts[ch] / total if ch in counts else 1 / (total + 1)
        h += -p * math.log(p) / math.log(2)
    return h


def test_char_table_examples():
    assert build_char_table(["ab", "ba"]).probs == {"a": 0.5, "b": 0.5}
    assert build_char_table(["aaa"]).probs == {"a": 1.0}
    t = build_char_table(["bot", "tob"])
    assert t.probs == pytest.approx({"b": 1 / 3, "o": 1 / 3, "t": 1 / 3})
    assert t.total_chars == 6


def test_char_table_empty_corpus():
    with pytest.raises(EmptyCorpus):
        build_char_table(["", ""])


def test_entropy_examples():
    half = build_char_table(["ab"])
    assert name_entropy("", half) == 0.0
    assert name_entropy("ab", half) == pytest.approx(1.0, abs=1e-12)
    t = build_char_table(["bot", "tob"])
    assert name_entropy("bot", t) == pytest.approx(3 * (1 / 3) * math.log2(3), abs=1e-12)
    assert name_entropy("bot", t) == pytest.approx(1.58496, abs=1e-5)


def test_unknown_char_gets_floor():
    t = build_char_table(["ab"])
    p = 1 / 3
    assert name_entropy("z", t) == pytest.approx(-p * math.log2(p))


def test_char_table_text_round_trip(tmp_path):
    t = build_char_table(["Ann Smith", "bot_9000 🙂", "Ünïcode"])
    t.save(tmp_path / "t.tsv")
    back = NameCharTable.load(tmp_path / "t.tsv")
    assert back == t
    with pytest.raises(ParseError):
        NameCharTable.from_text("nonsense\n")


def test_username_feature_examples():
    t = build_char_table(["abc"])
    assert list(username_features("Bot_123", t)[1:]) == [1, 2, 3, 1, 0, 0]
    assert list(username_features("", t)) == [0] * 7
    v = username_features("#ai🙂", t)
    assert (v[6], v[5], v[2]) == (1, 1, 2)


def test_screenname_feature_examples():
    t = build_char_table(["abc"])
    assert screenname_features("Ann Smith", t)[7] == 2
    assert list(screenname_features("  ", t)[1:]) == [0] * 7
    v = screenname_features("Dr. Bot 9000 🙂", t)
    assert (v[7], v[3], v[4], v[5]) == (4, 4, 1, 1)


def test_emoji_class_matches_unicode_property():
    # Emoji_Presentation characters are emoji; text-default symbols are punctuation
    assert char_classes("🙂🚀✨")["emoji"] == 3
    assert char_classes("☺")["punct"] == 1


def test_tfidf_examples():
    m = fit_tfidf(["bot bot", "bot"])
    assert m.vocab == {"bot": 0}
    assert m.idf[0] == pytest.approx(1.0)
    with pytest.raises(EmptyVocabulary):
        fit_tfidf(["a b"], TfidfConfig(min_df=1))
    with pytest.raises(EmptyCorpus):
        fit_tfidf([])
    capped = fit_tfidf(["x1 y2", "x1"], TfidfConfig(max_features=1, min_df=1))
    assert capped.vocab == {"x1": 0}


def test_tfidf_transform_examples():
    m = fit_tfidf(["bot spam", "bot"], TfidfConfig(min_df=1))
    assert m.terms == ["bot", "spam"]
    idf_spam = math.log(3 / 2) + 1
    assert m.idf[1] == pytest.approx(idf_spam)
    raw = np.array([2.0, idf_spam])
    assert np.allclose(tfidf_transform("bot bot spam", m), raw / np.linalg.norm(raw), atol=1e-15)
    assert not tfidf_transform("nothing here", m).any()
    single = fit_tfidf(["bot", "bot"])
    assert tfidf_transform("bot", single)[0] == pytest.approx(1.0)


def test_vocab_cap_tiebreak():
    corpus = ["bb aa cc", "bb aa cc dd", "dd"]
    m = fit_tfidf(corpus, TfidfConfig(max_features=2, min_df=1))
    # every token occurs twice, so the cap falls back to lexicographic order
    assert m.terms == ["aa", "bb"]


def test_tokenizer():
    assert tokenize("Hello, WORLD a 42 x_y") == ["hello", "world", "42"]


def test_metadata_examples():
    assert list(metadata_features(MetadataFields())) == [-1, -1, -1, -1, -1, 0, 0]
    assert list(metadata_features(MetadataFields(followers=10, verified=True))) == [10, -1, -1, -1, -1, 0, 1]
    full = MetadataFields(5, 3, 0, 12, 40, False, True)
    assert list(metadata_features(full)) == [5, 3, 0, 12, 40, 0, 1]


def test_posts_examples():
    m = fit_tfidf(["bot", "bot"])
    assert list(posts_features([], m)) == [0, -1, -1, -1, -1]
    one = post_stats([PostRecord("x", likes=4)])
    assert (one[0], one[1]) == (4.0, -1.0)
    assert post_stats([PostRecord(likes=2), PostRecord(likes=4)])[0] == 3.0


def test_posts_cap_keeps_most_recent():
    posts = [PostRecord("old", likes=1000)] + [PostRecord("new", likes=1)] * 200
    assert post_stats(posts)[0] == 1.0


names = st.text(st.characters(max_codepoint=0x1F700), max_size=12)


@settings(max_examples=200, deadline=None)
@given(st.lists(names.filter(bool), min_size=1, max_size=6), names, names)
def test_entropy_properties(corpus, s, t):
    table = build_char_table(corpus)
    h = name_entropy(s, table)
    assert h >= 0
    assert math.isclose(name_entropy(s + t, table), h + name_entropy(t, table), abs_tol=1e-9)
    assert math.isclose(h, brute_entropy(s, corpus), abs_tol=1e-9)
    assert abs(sum(table.probs.values()) - 1) < 1e-9
    if s and not all(table.prob(c) == 1.0 for c in s):
        assert h > 0


@settings(max_examples=200, deadline=None)
@given(names)
def test_char_class_partition(s):
    c = char_classes(s)
    assert sum(c.values()) == len(s)
    assert c["upper"] == sum(unicodedata.category(ch) == "Lu" for ch in s)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.text("ab c1", max_size=12), min_size=1, max_size=6), st.text("ab c1xy", max_size=20))
def test_tfidf_norm_and_purity(corpus, text):
    try:
        m = fit_tfidf(corpus, TfidfConfig(min_df=1))
    except EmptyVocabulary:
        return
    v = tfidf_transform(text, m)
    norm = np.linalg.norm(v)
    assert norm == 0 or abs(norm - 1) < 1e-12
    assert np.array_equal(v, tfidf_transform(text, m))
    assert sorted(m.vocab.values()) == list(range(m.size)) and m.idf.size == m.size
