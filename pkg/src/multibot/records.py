"""Canonical user records and harmonization of platform-native record streams.

Every platform export is reduced to a :class:`UserRecord` with five optional
field groups (username, screenname, description, metadata, posts).  A group is
either present (possibly empty) or absent; the distinction drives which field
classifiers run downstream.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import (
    MappingError,
    MissingUserId,
    ParseError,
    TypeCoercionFailure,
    UnreadableStream,
)

logger = logging.getLogger(__name__)


class PlatformKind(str, Enum):
    TWITTER_V1 = "twitter_v1"
    TWITTER_V2 = "twitter_v2"
    REDDIT_PUSHSHIFT = "reddit_pushshift"
    INSTAGRAM_CROWDTANGLE = "instagram_crowdtangle"
    CUSTOM = "custom"

    @property
    def family(self) -> str:
        """Coarse platform name used for per-platform evaluation subsets."""
        if self in (PlatformKind.TWITTER_V1, PlatformKind.TWITTER_V2):
            return "twitter"
        if self is PlatformKind.REDDIT_PUSHSHIFT:
            return "reddit"
        if self is PlatformKind.INSTAGRAM_CROWDTANGLE:
            return "instagram"
        return "custom"


class Label(str, Enum):
    BOT = "bot"
    HUMAN = "human"


METADATA_KEYS = ("followers", "following", "listed", "posts_count", "likes_count")
METADATA_FLAGS = ("protected", "verified")
POST_COUNT_KEYS = ("likes", "retweets", "replies", "quotes")

CANONICAL_FIELDS = (
    "user_id",
    "username",
    "screenname",
    "description",
    *METADATA_KEYS,
    *METADATA_FLAGS,
    "post.text",
    *(f"post.{k}" for k in POST_COUNT_KEYS),
    "label",
)


@dataclass(frozen=True)
class MetadataFields:
    followers: int | None = None
    following: int | None = None
    listed: int | None = None
    posts_count: int | None = None
    likes_count: int | None = None
    protected: bool | None = None
    verified: bool | None = None

    def __post_init__(self):
        for key in METADATA_KEYS:
            value = getattr(self, key)
            if value is not None and value < 0:
                raise TypeCoercionFailure(f"{key} must be non-negative, got {value}")

    def is_empty(self) -> bool:
        return all(getattr(self, k) is None for k in METADATA_KEYS + METADATA_FLAGS)


@dataclass(frozen=True)
class PostRecord:
    text: str = ""
    likes: int | None = None
    retweets: int | None = None
    replies: int | None = None
    quotes: int | None = None

    def __post_init__(self):
        for key in POST_COUNT_KEYS:
            value = getattr(self, key)
            if value is not None and value < 0:
                raise TypeCoercionFailure(f"post {key} must be non-negative, got {value}")


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    platform: PlatformKind = PlatformKind.CUSTOM
    username: str | None = None
    screenname: str | None = None
    description: str | None = None
    metadata: MetadataFields | None = None
    posts: tuple[PostRecord, ...] | None = None
    label: Label | None = None

    def __post_init__(self):
        if not self.user_id:
            raise MissingUserId("user_id must be a non-empty string")
        if self.posts is not None and not isinstance(self.posts, tuple):
            object.__setattr__(self, "posts", tuple(self.posts))

    def to_json(self) -> dict[str, Any]:
        """Canonical JSON layout, readable back through :data:`CANONICAL_MAPPING`."""
        out: dict[str, Any] = {"user_id": self.user_id, "platform": self.platform.value}
        if self.label is not None:
            out["label"] = self.label.value
        for key in ("username", "screenname", "description"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.metadata is not None:
            out["metadata"] = {
                k: getattr(self.metadata, k)
                for k in METADATA_KEYS + METADATA_FLAGS
                if getattr(self.metadata, k) is not None
            }
        if self.posts is not None:
            out["posts"] = [
                {"text": p.text, **{k: getattr(p, k) for k in POST_COUNT_KEYS if getattr(p, k) is not None}}
                for p in self.posts
            ]
        return out


@dataclass(frozen=True)
class FieldMapping:
    """Canonical field path -> dot-delimited source key path."""

    entries: Mapping[str, str]

    def __post_init__(self):
        unknown = sorted(set(self.entries) - set(CANONICAL_FIELDS))
        if unknown:
            raise MappingError(f"unknown canonical fields in mapping: {', '.join(unknown)}")
        if "user_id" not in self.entries:
            raise MappingError("mapping must define user_id")
        for key, value in self.entries.items():
            if not isinstance(value, str) or not value:
                raise MappingError(f"mapping for {key} must be a non-empty key path")

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "FieldMapping":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise UnreadableStream(f"cannot read mapping {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise MappingError(f"mapping {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise MappingError(f"mapping {path} must be a JSON object")
        return cls(dict(data))


BUILTIN_MAPPINGS: dict[PlatformKind, FieldMapping] = {
    # one tweet object per line, author embedded under "user"
    PlatformKind.TWITTER_V1: FieldMapping({
        "user_id": "user.id_str",
        "username": "user.screen_name",
        "screenname": "user.name",
        "description": "user.description",
        "followers": "user.followers_count",
        "following": "user.friends_count",
        "listed": "user.listed_count",
        "posts_count": "user.statuses_count",
        "likes_count": "user.favourites_count",
        "protected": "user.protected",
        "verified": "user.verified",
        "post.text": "text",
        "post.likes": "favorite_count",
        "post.retweets": "retweet_count",
        "post.replies": "reply_count",
        "post.quotes": "quote_count",
        "label": "label",
    }),
    # one user object per line, optional expanded tweet under "tweet"
    PlatformKind.TWITTER_V2: FieldMapping({
        "user_id": "id",
        "username": "name",
        "screenname": "username",
        "description": "description",
        "followers": "public_metrics.followers_count",
        "following": "public_metrics.following_count",
        "listed": "public_metrics.listed_count",
        "posts_count": "public_metrics.tweet_count",
        "likes_count": "public_metrics.like_count",
        "protected": "protected",
        "verified": "verified",
        "post.text": "tweet.text",
        "post.likes": "tweet.public_metrics.like_count",
        "post.retweets": "tweet.public_metrics.retweet_count",
        "post.replies": "tweet.public_metrics.reply_count",
        "post.quotes": "tweet.public_metrics.quote_count",
        "label": "label",
    }),
    # one comment or submission per line; no profile description or metadata
    PlatformKind.REDDIT_PUSHSHIFT: FieldMapping({
        "user_id": "author",
        "username": "author",
        "post.text": "body",
        "post.likes": "score",
        "post.replies": "num_comments",
        "label": "label",
    }),
    # one post per line with the account embedded; post bodies are not used
    PlatformKind.INSTAGRAM_CROWDTANGLE: FieldMapping({
        "user_id": "account.id",
        "username": "account.handle",
        "screenname": "account.name",
        "followers": "account.subscriberCount",
        "verified": "account.verified",
        "label": "label",
    }),
}

# layout written by UserRecord.to_json and the synthetic generator
CANONICAL_MAPPING = FieldMapping({
    "user_id": "user_id",
    "username": "username",
    "screenname": "screenname",
    "description": "description",
    **{k: f"metadata.{k}" for k in METADATA_KEYS + METADATA_FLAGS},
    "post.text": "posts.text",
    **{f"post.{k}": f"posts.{k}" for k in POST_COUNT_KEYS},
    "label": "label",
})

_MISSING = object()


def resolve_path(raw: Any, path: str) -> Any:
    """Follow a dot-delimited key path; lists fan out over their elements.

    Returns ``_MISSING`` when a key is absent or the value is JSON null.
    """
    node = raw
    parts = path.split(".")
    for i, part in enumerate(parts):
        if isinstance(node, list):
            rest = ".".join(parts[i:])
            return [resolve_path(item, rest) for item in node]
        if not isinstance(node, Mapping) or part not in node:
            return _MISSING
        node = node[part]
        if node is None:
            return _MISSING
    return node


def _to_count(value: Any, name: str) -> int:
    if isinstance(value, bool):
        raise TypeCoercionFailure(f"{name}: expected a count, got boolean")
    if isinstance(value, int):
        result = value
    elif isinstance(value, float):
        if not value.is_integer():
            raise TypeCoercionFailure(f"{name}: {value!r} is not an integer")
        result = int(value)
    elif isinstance(value, str):
        try:
            result = int(value.strip().replace(",", ""))
        except ValueError:
            raise TypeCoercionFailure(f"{name}: {value!r} is not an integer") from None
    else:
        raise TypeCoercionFailure(f"{name}: cannot interpret {type(value).__name__} as a count")
    if result < 0:
        raise TypeCoercionFailure(f"{name}: negative count {result}")
    return result


def _to_bool(value: Any, name: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    if isinstance(value, str) and value.strip().lower() in ("true", "false", "1", "0", "yes", "no"):
        return value.strip().lower() in ("true", "1", "yes")
    raise TypeCoercionFailure(f"{name}: cannot interpret {value!r} as a boolean")


def _to_label(value: Any) -> Label:
    if isinstance(value, bool):
        return Label.BOT if value else Label.HUMAN
    if isinstance(value, (int, float)) and value in (0, 1):
        return Label.BOT if value == 1 else Label.HUMAN
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("bot", "1", "true"):
            return Label.BOT
        if text in ("human", "0", "false"):
            return Label.HUMAN
    raise TypeCoercionFailure(f"label: cannot interpret {value!r} as bot/human")


def _to_text(value: Any, name: str) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return str(value)
    raise TypeCoercionFailure(f"{name}: expected text, got {type(value).__name__}")


def _harmonize_posts(raw: Any, mapping: FieldMapping) -> tuple[PostRecord, ...] | None:
    resolved = {key: resolve_path(raw, mapping.entries[key])
                for key in ("post.text", *(f"post.{k}" for k in POST_COUNT_KEYS))
                if key in mapping.entries}
    present = {k: v for k, v in resolved.items() if v is not _MISSING}
    if not present:
        return None
    lists = [v for v in present.values() if isinstance(v, list)]
    if lists:
        n = max(len(v) for v in lists)
        columns = {k: (v if isinstance(v, list) else [v] * n) for k, v in present.items()}
    else:
        n = 1
        columns = {k: [v] for k, v in present.items()}
    posts = []
    for i in range(n):
        def cell(key):
            col = columns.get(key)
            if col is None or i >= len(col) or col[i] is _MISSING:
                return None
            return col[i]
        text = cell("post.text")
        counts = {}
        for k in POST_COUNT_KEYS:
            value = cell(f"post.{k}")
            counts[k] = None if value is None else _to_count(value, f"post.{k}")
        posts.append(PostRecord(text="" if text is None else _to_text(text, "post.text"), **counts))
    return tuple(posts)


def harmonize(raw: Mapping[str, Any], mapping: FieldMapping | None = None,
              platform: PlatformKind | str = PlatformKind.CUSTOM) -> UserRecord:
    """Map one source record onto the canonical :class:`UserRecord`."""
    platform = PlatformKind(platform)
    if mapping is None:
        if platform is PlatformKind.CUSTOM:
            raise MappingError("platform 'custom' requires a field mapping")
        mapping = BUILTIN_MAPPINGS[platform]
    entries = mapping.entries

    def scalar(key):
        if key not in entries:
            return _MISSING
        value = resolve_path(raw, entries[key])
        if isinstance(value, list):
            raise TypeCoercionFailure(f"{key}: expected a single value, got a list")
        return value

    user_id = scalar("user_id")
    if user_id is _MISSING or isinstance(user_id, (dict, list)) or str(user_id).strip() == "":
        raise MissingUserId(f"no user_id at '{entries['user_id']}'")

    names = {}
    for key in ("username", "screenname", "description"):
        value = scalar(key)
        names[key] = None if value is _MISSING else _to_text(value, key)

    meta = {}
    for key in METADATA_KEYS:
        value = scalar(key)
        meta[key] = None if value is _MISSING else _to_count(value, key)
    for key in METADATA_FLAGS:
        value = scalar(key)
        meta[key] = None if value is _MISSING else _to_bool(value, key)
    metadata = MetadataFields(**meta)

    label = scalar("label")
    return UserRecord(
        user_id=str(user_id),
        platform=platform,
        metadata=None if metadata.is_empty() else metadata,
        posts=_harmonize_posts(raw, mapping),
        label=None if label is _MISSING else _to_label(label),
        **names,
    )


@dataclass
class LineError:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


def merge_records(first: UserRecord, other: UserRecord) -> UserRecord:
    """Combine two records of one user: first-seen scalars win, posts append."""
    updates: dict[str, Any] = {}
    for key in ("username", "screenname", "description", "label"):
        if getattr(first, key) is None and getattr(other, key) is not None:
            updates[key] = getattr(other, key)
    if other.metadata is not None:
        if first.metadata is None:
            updates["metadata"] = other.metadata
        else:
            filled = {k: getattr(other.metadata, k) for k in METADATA_KEYS + METADATA_FLAGS
                      if getattr(first.metadata, k) is None and getattr(other.metadata, k) is not None}
            if filled:
                updates["metadata"] = replace(first.metadata, **filled)
    if other.posts is not None:
        updates["posts"] = (first.posts or ()) + other.posts
    return replace(first, **updates) if updates else first


def _iter_rows(text_lines: Iterable[tuple[int, str]], fmt: str):
    if fmt == "csv":
        lines = list(text_lines)
        if not lines:
            return
        reader = csv.DictReader(io.StringIO("\n".join(line for _, line in lines)))
        for (lineno, _), row in zip(lines[1:], reader):
            yield lineno, {k: v for k, v in row.items() if v not in (None, "")}, None
        return
    for lineno, line in text_lines:
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            yield lineno, None, f"malformed record: {exc.msg}"
            continue
        if not isinstance(row, dict):
            yield lineno, None, "record is not an object"
            continue
        yield lineno, row, None


def parse_records(stream, platform: PlatformKind | str = PlatformKind.CUSTOM,
                  mapping: FieldMapping | None = None,
                  fmt: str = "ndjson") -> tuple[list[UserRecord], list[LineError]]:
    """Parse a newline-delimited stream into merged user records.

    ``stream`` is a binary file object, bytes, or an iterable of byte/str
    lines.  Malformed lines are collected as :class:`LineError` entries.
    CSV (with a header row) is accepted only together with an explicit mapping.
    """
    platform = PlatformKind(platform)
    if fmt == "csv" and mapping is None:
        raise MappingError("CSV input requires a custom field mapping")
    if mapping is None and platform is PlatformKind.CUSTOM:
        raise MappingError("platform 'custom' requires a field mapping")

    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    errors: list[LineError] = []
    decoded: list[tuple[int, str]] = []
    try:
        for lineno, line in enumerate(stream, start=1):
            if isinstance(line, (bytes, bytearray)):
                try:
                    line = line.decode("utf-8")
                except UnicodeDecodeError as exc:
                    errors.append(LineError(lineno, f"invalid UTF-8: {exc.reason}"))
                    continue
            decoded.append((lineno, line.rstrip("\r\n")))
    except OSError as exc:
        raise UnreadableStream(str(exc)) from exc

    merged: dict[str, UserRecord] = {}
    for lineno, row, problem in _iter_rows(decoded, fmt):
        if problem is not None:
            errors.append(LineError(lineno, problem))
            continue
        try:
            record = harmonize(row, mapping, platform)
        except (MissingUserId, TypeCoercionFailure) as exc:
            errors.append(LineError(lineno, f"{type(exc).__name__}: {exc}"))
            continue
        if record.user_id in merged:
            merged[record.user_id] = merge_records(merged[record.user_id], record)
        else:
            merged[record.user_id] = record
    errors.sort(key=lambda e: e.line)
    return list(merged.values()), errors


def read_records(path: str | os.PathLike, platform: PlatformKind | str = PlatformKind.CUSTOM,
                 mapping: FieldMapping | None = None) -> tuple[list[UserRecord], list[LineError]]:
    fmt = "csv" if str(path).lower().endswith(".csv") else "ndjson"
    try:
        with open(path, "rb") as fh:
            return parse_records(fh, platform, mapping, fmt=fmt)
    except OSError as exc:
        raise UnreadableStream(f"cannot read {path}: {exc}") from exc


@dataclass
class DatasetManifest:
    name: str
    source_path: Path
    platform: PlatformKind
    record_count: int = 0
    bot_fraction: float | None = None
    mapping_path: Path | None = None
    label_key: str | None = None
    errors: list[LineError] = field(default_factory=list, repr=False)

    def mapping(self) -> FieldMapping | None:
        if self.mapping_path is None:
            if self.platform is PlatformKind.CUSTOM:
                raise MappingError(f"dataset {self.name}: platform 'custom' requires a mapping")
            base = None
        else:
            base = FieldMapping.from_file(self.mapping_path)
        if self.label_key:
            entries = dict((base or BUILTIN_MAPPINGS[self.platform]).entries)
            entries["label"] = self.label_key
            return FieldMapping(entries)
        return base

    def load(self) -> list[UserRecord]:
        records, errors = read_records(self.source_path, self.platform, self.mapping())
        self.errors = errors
        return records


def manifest_from_dict(data: Mapping[str, Any], base_dir: str | os.PathLike = ".") -> DatasetManifest:
    """Build an (uncounted) manifest from a config entry; relative paths resolve against base_dir."""
    base = Path(base_dir)
    try:
        name = str(data["name"])
        source = Path(data["path"])
        platform = PlatformKind(data.get("platform", "custom"))
    except KeyError as exc:
        raise ParseError(f"manifest is missing key {exc}") from None
    except ValueError as exc:
        raise ParseError(f"manifest: {exc}") from None
    mapping = data.get("mapping")
    return DatasetManifest(
        name=name,
        source_path=source if source.is_absolute() else base / source,
        platform=platform,
        mapping_path=None if mapping is None else (Path(mapping) if Path(mapping).is_absolute() else base / mapping),
        label_key=data.get("label_key"),
    )


def count_dataset(manifest: DatasetManifest, records: list[UserRecord]) -> DatasetManifest:
    manifest.record_count = len(records)
    labels = [r.label for r in records if r.label is not None]
    manifest.bot_fraction = (sum(1 for lb in labels if lb is Label.BOT) / len(labels)) if labels else None
    return manifest


def load_manifest(path: str | os.PathLike) -> DatasetManifest:
    """Read a manifest file and recount records/bot share from the actual data."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UnreadableStream(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"manifest {path} must be a JSON object")
    manifest = manifest_from_dict(data, Path(path).parent)
    return count_dataset(manifest, manifest.load())
