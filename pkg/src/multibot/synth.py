"""Synthetic labeled multi-platform users for desk-scale tests.

Bots get random alphanumeric names (high entropy), promotional text and heavily
retweeted posts; humans get dictionary-word names and everyday text.  The
``separation`` knob controls how often a field is drawn from the *other*
class's generator, taking the data from trivially separable to overlapping.
"""

from __future__ import annotations

import json
import os
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidConfig
from .records import (
    CANONICAL_MAPPING,
    Label,
    MetadataFields,
    PlatformKind,
    PostRecord,
    UserRecord,
)

REGIMES = {"trivial": 1.0, "overlapping": 0.3}
GROUPS = ("username", "screenname", "description", "user_metadata", "posts")

# field groups a platform export never carries
UNAVAILABLE = {
    PlatformKind.REDDIT_PUSHSHIFT: {"screenname", "description", "user_metadata"},
    PlatformKind.INSTAGRAM_CROWDTANGLE: {"posts"},
}

WORDS = """apple river stone maple cloud tiger ocean forest silver garden winter summer
happy lucky sunny little blue green golden quiet wild brave coffee pixel music
dream star moon light north south rose lily daisy ember frost willow cedar""".split()
FIRST = """anna ben carla david emma felix grace henry iris jack kate leo maya noah
olivia peter quinn rachel sam tara umar vera will xena yusuf zoe""".split()
LAST = """smith jones garcia brown miller davis lopez wilson moore taylor anderson
thomas white harris martin clark lewis walker young allen""".split()
BOT_TOKENS = """crypto giveaway follow retweet promo free click link deals earn bonus
airdrop win prize subscribe offer cheap followers boost viral""".split()
HUMAN_TOKENS = """love family coffee teacher music dad mom travel reader runner opinions
own weekend garden dog cat cooking books football nurse student photography""".split()
SHARED_TOKENS = """the and new day today world life time people great""".split()
EMOJI = ["\U0001F642", "\U0001F680", "\U0001F525", "\U0001F4B0", "✨"]
ALNUM = string.ascii_letters + string.digits


@dataclass(frozen=True)
class SynthConfig:
    n_users: int = 1000
    bot_fraction: float = 0.5
    platform_mix: Mapping[str, float] = field(default_factory=lambda: {"twitter_v2": 1.0})
    regime: str = "trivial"
    separation: float | None = None
    dropout: Mapping[str, float] = field(default_factory=dict)
    posts_per_user: tuple[int, int] = (1, 6)
    seed: int = 0

    def validate(self) -> None:
        if self.n_users < 0:
            raise InvalidConfig("n_users must be non-negative")
        if not 0.0 <= self.bot_fraction <= 1.0:
            raise InvalidConfig("bot_fraction must lie in [0, 1]")
        if self.regime not in REGIMES and self.separation is None:
            raise InvalidConfig(f"unknown regime {self.regime!r}")
        if self.separation is not None and not 0.0 <= self.separation <= 1.0:
            raise InvalidConfig("separation must lie in [0, 1]")
        for key, rate in self.dropout.items():
            if key not in GROUPS:
                raise InvalidConfig(f"unknown field group {key!r} in dropout")
            if not 0.0 <= rate <= 1.0:
                raise InvalidConfig(f"dropout for {key} must lie in [0, 1]")
        if not self.platform_mix:
            raise InvalidConfig("platform_mix is empty")
        for key, share in self.platform_mix.items():
            try:
                PlatformKind(key)
            except ValueError:
                raise InvalidConfig(f"unknown platform {key!r}") from None
            if share < 0:
                raise InvalidConfig("platform shares must be non-negative")
        if sum(self.platform_mix.values()) <= 0:
            raise InvalidConfig("platform shares sum to zero")
        lo, hi = self.posts_per_user
        if lo < 0 or hi < lo:
            raise InvalidConfig("posts_per_user must be a (low, high) range with 0 <= low <= high")

    @property
    def effective_separation(self) -> float:
        return self.separation if self.separation is not None else REGIMES[self.regime]


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _random_alnum(rng, lo, hi) -> str:
    n = int(rng.integers(lo, hi + 1))
    return "".join(_pick(rng, ALNUM) for _ in range(n))


def _username(rng, bot: bool) -> str:
    if bot:
        return _random_alnum(rng, 9, 15)
    name = _pick(rng, WORDS) + _pick(rng, WORDS)
    if rng.random() < 0.3:
        name = name.capitalize()
    if rng.random() < 0.3:
        name += str(int(rng.integers(70, 100)))
    return name


def _screenname(rng, bot: bool) -> str:
    if bot:
        name = _random_alnum(rng, 6, 12)
        if rng.random() < 0.5:
            name += " " + _pick(rng, EMOJI) + _pick(rng, EMOJI)
        return name
    name = f"{_pick(rng, FIRST).capitalize()} {_pick(rng, LAST).capitalize()}"
    if rng.random() < 0.1:
        name += " " + _pick(rng, EMOJI)
    return name


def _text(rng, bot: bool, lo: int, hi: int) -> str:
    pool = BOT_TOKENS if bot else HUMAN_TOKENS
    words = []
    for _ in range(int(rng.integers(lo, hi + 1))):
        words.append(_pick(rng, SHARED_TOKENS) if rng.random() < 0.3 else _pick(rng, pool))
    text = " ".join(words)
    if bot and rng.random() < 0.5:
        text += " #" + _pick(rng, BOT_TOKENS)
    return text


def _metadata(rng, bot: bool) -> MetadataFields:
    if bot:
        return MetadataFields(
            followers=int(rng.lognormal(3.0, 1.0)),
            following=int(rng.lognormal(7.0, 0.5)),
            listed=int(rng.integers(0, 3)),
            posts_count=int(rng.lognormal(9.0, 0.7)),
            likes_count=int(rng.lognormal(2.0, 1.0)),
            protected=False,
            verified=False,
        )
    return MetadataFields(
        followers=int(rng.lognormal(6.0, 1.2)),
        following=int(rng.lognormal(5.0, 0.8)),
        listed=int(rng.integers(0, 40)),
        posts_count=int(rng.lognormal(6.5, 1.0)),
        likes_count=int(rng.lognormal(7.0, 1.0)),
        protected=bool(rng.random() < 0.1),
        verified=bool(rng.random() < 0.05),
    )


def _posts(rng, bot: bool, lo: int, hi: int) -> tuple[PostRecord, ...]:
    posts = []
    for _ in range(int(rng.integers(lo, hi + 1))):
        if bot:
            posts.append(PostRecord(_text(rng, True, 4, 10), likes=int(rng.poisson(2)),
                                    retweets=int(rng.poisson(60)), replies=int(rng.poisson(1)),
                                    quotes=int(rng.poisson(1))))
        else:
            posts.append(PostRecord(_text(rng, False, 4, 14), likes=int(rng.poisson(15)),
                                    retweets=int(rng.poisson(3)), replies=int(rng.poisson(4)),
                                    quotes=int(rng.poisson(0.5))))
    return tuple(posts)


def generate(config: SynthConfig) -> list[UserRecord]:
    """Deterministic labeled users; exactly round(n * bot_fraction) of them bots."""
    config.validate()
    n = config.n_users
    n_bots = int(np.floor(n * config.bot_fraction + 0.5))
    is_bot = np.zeros(n, dtype=bool)
    is_bot[np.random.default_rng([config.seed, 1]).permutation(n)[:n_bots]] = True

    platforms = [PlatformKind(p) for p in config.platform_mix]
    shares = np.array([config.platform_mix[p.value] for p in platforms], dtype=np.float64)
    shares = shares / shares.sum()
    keep = config.effective_separation * 0.5 + 0.5
    lo, hi = config.posts_per_user

    records = []
    for i in range(n):
        rng = np.random.default_rng([config.seed, 0, i])
        bot = bool(is_bot[i])
        platform = platforms[int(rng.choice(len(platforms), p=shares))]
        # one draw per group so dropout and class mixing stay independent across groups
        source = {g: bot if rng.random() < keep else not bot for g in GROUPS}
        present = {g: g not in UNAVAILABLE.get(platform, ()) and rng.random() >= config.dropout.get(g, 0.0)
                   for g in GROUPS}
        fields = dict(
            username=_username(rng, source["username"]),
            screenname=_screenname(rng, source["screenname"]),
            description=_text(rng, source["description"], 3, 10),
            metadata=_metadata(rng, source["user_metadata"]),
            posts=_posts(rng, source["posts"], lo, hi),
        )
        key = {"user_metadata": "metadata"}
        records.append(UserRecord(
            user_id=f"u{config.seed}_{i:06d}",
            platform=platform,
            label=Label.BOT if bot else Label.HUMAN,
            **{key.get(g, g): (fields[key.get(g, g)] if present[g] else None) for g in GROUPS},
        ))
    return records


def write_ndjson(records: Sequence[UserRecord], path: str | os.PathLike) -> int:
    """Write records in the canonical layout (read back with ``CANONICAL_MAPPING``)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
    return len(records)


def write_dataset(config: SynthConfig, out_dir: str | os.PathLike, name: str = "synth") -> dict:
    """Write one file per platform plus the mapping and a training config; returns the config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = generate(config)
    mapping_path = out / "canonical_mapping.json"
    mapping_path.write_text(json.dumps(dict(CANONICAL_MAPPING.entries), indent=2) + "\n", encoding="utf-8")
    datasets = []
    for platform in dict.fromkeys(r.platform for r in records):
        subset = [r for r in records if r.platform is platform]
        path = out / f"{name}_{platform.value}.jsonl"
        write_ndjson(subset, path)
        datasets.append({"name": f"{name}_{platform.value}", "path": path.name,
                         "platform": platform.value, "mapping": mapping_path.name})
    train_config = {"seed": config.seed, "datasets": datasets}
    (out / "config.json").write_text(json.dumps(train_config, indent=2) + "\n", encoding="utf-8")
    return train_config
