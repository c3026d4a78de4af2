"""Per-field feature extraction: name statistics with corpus entropy, TF-IDF, metadata."""

from __future__ import annotations

import math
import os
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import regex
import scipy.sparse as sp

from .errors import EmptyCorpus, EmptyVocabulary, ParseError, UnreadableStream
from .records import METADATA_FLAGS, METADATA_KEYS, POST_COUNT_KEYS, MetadataFields, PostRecord

CHAR_TABLE_VERSION = "1"

NAME_FEATURES = ("entropy", "n_upper", "n_lower", "n_digit", "n_punct", "n_emoji", "n_hashtag")
SCREENNAME_FEATURES = NAME_FEATURES + ("n_words",)
METADATA_FEATURES = METADATA_KEYS + METADATA_FLAGS
POST_STAT_FEATURES = tuple(f"mean_{k}" for k in POST_COUNT_KEYS)

MAX_POSTS = 200
MISSING = -1.0

_EMOJI = regex.compile(r"\p{Emoji_Presentation}")
_TOKEN = regex.compile(r"[\p{L}\p{Nd}]+")


@dataclass(frozen=True)
class NameCharTable:
    """Character probabilities estimated from a name corpus."""

    probs: dict[str, float]
    total_chars: int
    version: str = CHAR_TABLE_VERSION

    @property
    def floor(self) -> float:
        # probability assigned to characters never seen in the corpus
        return 1.0 / (self.total_chars + 1)

    def prob(self, ch: str) -> float:
        return self.probs.get(ch, self.floor)

    def to_text(self) -> str:
        lines = [f"# multibot-chartable version={self.version} total_chars={self.total_chars}"]
        for ch in sorted(self.probs):
            lines.append(f"{ord(ch):X}\t{self.probs[ch]!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "NameCharTable":
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# multibot-chartable"):
            raise ParseError("not a character table: missing header")
        header = dict(part.split("=", 1) for part in lines[0].split()[2:] if "=" in part)
        if header.get("version") != CHAR_TABLE_VERSION:
            raise ParseError(f"unsupported character table version {header.get('version')!r}")
        probs = {}
        try:
            total = int(header["total_chars"])
            for line in lines[1:]:
                if not line.strip():
                    continue
                code, prob = line.split("\t")
                probs[chr(int(code, 16))] = float(prob)
        except (KeyError, ValueError) as exc:
            raise ParseError(f"malformed character table: {exc}") from exc
        table = cls(probs, total)
        table.validate()
        return table

    def validate(self) -> None:
        if self.total_chars < 1 or not self.probs:
            raise ParseError("character table is empty")
        if any(not (0.0 < p <= 1.0) for p in self.probs.values()):
            raise ParseError("character probabilities must lie in (0, 1]")
        if abs(math.fsum(self.probs.values()) - 1.0) > 1e-9:
            raise ParseError("character probabilities do not sum to 1")

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "NameCharTable":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise UnreadableStream(f"cannot read character table {path}: {exc}") from exc


def build_char_table(names: Iterable[str]) -> NameCharTable:
    counts: Counter[str] = Counter()
    for name in names:
        if name:
            counts.update(name)
    total = sum(counts.values())
    if total == 0:
        raise EmptyCorpus("no non-empty names to build a character table from")
    return NameCharTable({ch: n / total for ch, n in sorted(counts.items())}, total)


def name_entropy(name: str, table: NameCharTable) -> float:
    """Positional sum of -p*log2(p) over every character of ``name``."""
    total = 0.0
    for ch in name:
        p = table.prob(ch)
        total -= p * math.log2(p)
    return total + 0.0  # normalise -0.0


def char_classes(text: str) -> dict[str, int]:
    """Count characters by class; ``other`` is the residual (letters without case, marks...)."""
    out = dict(upper=0, lower=0, digit=0, punct=0, emoji=0, space=0, other=0)
    for ch in text:
        cat = unicodedata.category(ch)
        if cat == "Lu":
            out["upper"] += 1
        elif cat == "Ll":
            out["lower"] += 1
        elif cat == "Nd":
            out["digit"] += 1
        elif ch.isspace():
            out["space"] += 1
        elif _EMOJI.match(ch):
            out["emoji"] += 1
        elif ch.isalnum():
            out["other"] += 1
        else:
            out["punct"] += 1
    return out


def _name_vector(name: str, table: NameCharTable) -> list[float]:
    c = char_classes(name)
    return [name_entropy(name, table), c["upper"], c["lower"], c["digit"],
            c["punct"], c["emoji"], name.count("#")]


def username_features(name: str, table: NameCharTable) -> np.ndarray:
    return np.array(_name_vector(name, table), dtype=np.float64)


def screenname_features(name: str, table: NameCharTable) -> np.ndarray:
    return np.array(_name_vector(name, table) + [len(name.split())], dtype=np.float64)


@dataclass(frozen=True)
class TfidfConfig:
    max_features: int = 5000
    min_df: int = 2
    min_token_len: int = 2


def tokenize(text: str, min_len: int = 2) -> list[str]:
    return [t for t in _TOKEN.findall(text.lower()) if len(t) >= min_len]


@dataclass(frozen=True)
class TfidfModel:
    vocab: dict[str, int]
    idf: np.ndarray
    config: TfidfConfig = field(default_factory=TfidfConfig)

    @property
    def size(self) -> int:
        return len(self.vocab)

    @property
    def terms(self) -> list[str]:
        terms = [""] * len(self.vocab)
        for term, idx in self.vocab.items():
            terms[idx] = term
        return terms

    @classmethod
    def empty(cls, config: TfidfConfig | None = None) -> "TfidfModel":
        return cls({}, np.zeros(0), config or TfidfConfig())

    def transform(self, texts: Sequence[str]) -> sp.csr_matrix:
        """Row-wise count*idf, L2-normalised; rows without vocabulary hits stay zero."""
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for text in texts:
            counts = Counter(t for t in tokenize(text, self.config.min_token_len) if t in self.vocab)
            cells = sorted((self.vocab[t], n * float(self.idf[self.vocab[t]])) for t, n in counts.items())
            norm = math.sqrt(math.fsum(v * v for _, v in cells))
            indices.extend(col for col, _ in cells)
            data.extend(v / norm for _, v in cells)
            indptr.append(len(indices))
        return sp.csr_matrix((np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64), indptr),
                             shape=(len(texts), self.size))


def fit_tfidf(corpus: Sequence[str], config: TfidfConfig | None = None) -> TfidfModel:
    config = config or TfidfConfig()
    if not corpus:
        raise EmptyCorpus("cannot fit TF-IDF on an empty corpus")
    df: Counter[str] = Counter()
    tf: Counter[str] = Counter()
    for doc in corpus:
        tokens = tokenize(doc, config.min_token_len)
        tf.update(tokens)
        df.update(set(tokens))
    eligible = [t for t in tf if df[t] >= config.min_df]
    eligible.sort(key=lambda t: (-tf[t], t))
    kept = sorted(eligible[: config.max_features])
    if not kept:
        raise EmptyVocabulary("no token survives the tokenizer and document-frequency rules")
    n_docs = len(corpus)
    idf = np.array([math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in kept])
    return TfidfModel({t: i for i, t in enumerate(kept)}, idf, config)


def tfidf_transform(text: str, model: TfidfModel) -> np.ndarray:
    return model.transform([text]).toarray()[0]


def metadata_features(m: MetadataFields) -> np.ndarray:
    values = [MISSING if getattr(m, k) is None else float(getattr(m, k)) for k in METADATA_KEYS]
    values += [1.0 if getattr(m, k) else 0.0 for k in METADATA_FLAGS]
    return np.array(values, dtype=np.float64)


def posts_document(posts: Sequence[PostRecord]) -> str:
    return " ".join(p.text for p in posts[-MAX_POSTS:])


def post_stats(posts: Sequence[PostRecord]) -> np.ndarray:
    recent = posts[-MAX_POSTS:]
    out = []
    for key in POST_COUNT_KEYS:
        values = [getattr(p, key) for p in recent if getattr(p, key) is not None]
        out.append(math.fsum(values) / len(values) if values else MISSING)
    return np.array(out, dtype=np.float64)


def posts_features(posts: Sequence[PostRecord], model: TfidfModel) -> np.ndarray:
    return np.concatenate([tfidf_transform(posts_document(posts), model), post_stats(posts)])
