"""Offline ingestion of tweet records, window schedules and the user index."""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Protocol

import yaml

LOGGER = logging.getLogger(__name__)

DEFAULT_LABELS = "abcdefgh"


class IngestError(Exception):
    """Raised when an input cannot be read at all (as opposed to a bad record)."""


def normalize_hashtag(tag: str) -> str:
    return tag.strip().lstrip("#").casefold()


def parse_timestamp(value) -> int:
    """Convert RFC 3339 text or integer epoch seconds to UTC epoch seconds."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"fractional epoch seconds: {value}")
        return int(value)
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, str):
        text = value.strip()
        if text.lstrip("-").isdigit():
            return int(text)
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
    else:
        raise ValueError(f"unsupported timestamp type {type(value).__name__}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(t: int) -> str:
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    created_at: int
    author_id: str
    retweeted_author_id: str | None = None
    hashtags: frozenset[str] = frozenset()
    window_label: str | None = None

    @property
    def is_retweet(self) -> bool:
        return self.retweeted_author_id is not None

    def to_json(self) -> dict:
        out = {"id": self.tweet_id, "created_at": self.created_at, "author_id": self.author_id}
        if self.retweeted_author_id is not None:
            out["retweeted_author_id"] = self.retweeted_author_id
        out["hashtags"] = sorted(self.hashtags)
        if self.window_label is not None:
            out["window"] = self.window_label
        return out


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    handle: str
    follower_count: int | None = None
    last_updated: int = 0

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "handle": self.handle,
            "follower_count": self.follower_count,
            "last_updated": self.last_updated,
        }


@dataclass(frozen=True)
class TimeWindow:
    label: str
    start: int
    end: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"window {self.label!r}: start must precede end")

    def contains(self, t: int) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class WindowSchedule:
    windows: tuple[TimeWindow, ...]
    hashtag_filter: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.windows:
            raise ValueError("a window schedule needs at least one window")
        labels = [w.label for w in self.windows]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate window labels in {labels}")
        for prev, nxt in zip(self.windows, self.windows[1:]):
            if prev.end > nxt.start:
                raise ValueError(f"windows {prev.label!r} and {nxt.label!r} overlap or are unsorted")

    @property
    def labels(self) -> list[str]:
        return [w.label for w in self.windows]

    def window(self, label: str) -> TimeWindow:
        for w in self.windows:
            if w.label == label:
                return w
        raise KeyError(label)

    def accepts(self, hashtags: Iterable[str]) -> bool:
        # an empty filter keeps everything
        return not self.hashtag_filter or not self.hashtag_filter.isdisjoint(hashtags)

    def to_config(self) -> dict:
        return {
            "hashtags": sorted(self.hashtag_filter),
            "windows": [
                {"label": w.label, "start": format_timestamp(w.start), "end": format_timestamp(w.end)}
                for w in self.windows
            ],
        }


def schedule_from_config(cfg: Mapping) -> WindowSchedule:
    """Build a schedule from the ``windows``/``hashtags`` keys of a config mapping.

    Windows without an explicit label are labelled a, b, c, ... in order.
    """
    raw = cfg.get("windows") or []
    windows = []
    for i, item in enumerate(raw):
        label = item.get("label")
        if label is None:
            if i >= len(DEFAULT_LABELS):
                raise ValueError("more than 8 windows require explicit labels")
            label = DEFAULT_LABELS[i]
        windows.append(TimeWindow(str(label), parse_timestamp(item["start"]), parse_timestamp(item["end"])))
    tags = frozenset(normalize_hashtag(t) for t in cfg.get("hashtags") or [])
    return WindowSchedule(tuple(windows), tags)


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read config {path}: {exc}") from exc
    cfg = yaml.safe_load(text) or {}
    if not isinstance(cfg, dict):
        raise IngestError(f"config {path} must be a key-value mapping")
    return cfg


def assign_window(t: int, schedule: WindowSchedule) -> str | None:
    for w in schedule.windows:
        if w.contains(t):
            return w.label
    return None


@dataclass(frozen=True)
class Diagnostic:
    line: int
    kind: str  # malformed | filtered | duplicate
    message: str
    tweet_id: str | None = None


def _record_from_obj(obj, schedule: WindowSchedule) -> TweetRecord:
    if not isinstance(obj, dict):
        raise ValueError("record is not a JSON object")
    for key in ("id", "created_at", "author_id"):
        if key not in obj or obj[key] is None:
            raise ValueError(f"missing field {key!r}")
    tweet_id = obj["id"]
    author = obj["author_id"]
    if not isinstance(tweet_id, str) or not tweet_id:
        raise ValueError("'id' must be a non-empty string")
    if not isinstance(author, str) or not author:
        raise ValueError("'author_id' must be a non-empty string")
    rt = obj.get("retweeted_author_id")
    if rt is not None and (not isinstance(rt, str) or not rt):
        raise ValueError("'retweeted_author_id' must be a non-empty string when present")
    tags = obj.get("hashtags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise ValueError("'hashtags' must be an array of strings")
    created = parse_timestamp(obj["created_at"])
    hashtags = frozenset(h for h in (normalize_hashtag(t) for t in tags) if h)
    return TweetRecord(tweet_id, created, author, rt, hashtags, assign_window(created, schedule))


def parse_corpus(
    stream: Iterable[str], schedule: WindowSchedule
) -> tuple[list[TweetRecord], list[Diagnostic]]:
    """Parse newline-delimited JSON records.

    Returns accepted records sorted by ``(created_at, tweet_id)`` together with
    a diagnostic for every non-blank line that did not end up in the output
    (malformed, outside the hashtag filter, or superseded by a later duplicate).
    """
    accepted: dict[str, tuple[int, TweetRecord]] = {}
    diagnostics: list[Diagnostic] = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            rec = _record_from_obj(json.loads(line), schedule)
        except (ValueError, TypeError) as exc:
            diagnostics.append(Diagnostic(lineno, "malformed", str(exc)))
            continue
        if not schedule.accepts(rec.hashtags):
            diagnostics.append(Diagnostic(lineno, "filtered", "no hashtag in filter", rec.tweet_id))
            continue
        if rec.tweet_id in accepted:
            old_line, _ = accepted[rec.tweet_id]
            diagnostics.append(
                Diagnostic(old_line, "duplicate", f"superseded by line {lineno}", rec.tweet_id)
            )
        accepted[rec.tweet_id] = (lineno, rec)
    records = sorted((r for _, r in accepted.values()), key=lambda r: (r.created_at, r.tweet_id))
    diagnostics.sort(key=lambda d: d.line)
    return records, diagnostics


class RecordProvider(Protocol):
    """Source of raw record lines; a live API client would implement this too."""

    def lines(self) -> Iterator[str]: ...


@dataclass
class FileRecordProvider:
    path: Path

    def lines(self) -> Iterator[str]:
        try:
            fh = open(self.path, encoding="utf-8")
        except OSError as exc:
            raise IngestError(f"cannot read corpus {self.path}: {exc}") from exc
        with fh:
            try:
                yield from fh
            except UnicodeDecodeError as exc:
                raise IngestError(f"corpus {self.path} is not valid UTF-8: {exc}") from exc


def read_corpus(path: str | Path, schedule: WindowSchedule):
    return parse_corpus(FileRecordProvider(Path(path)).lines(), schedule)


def dump_records(records: Iterable[TweetRecord]) -> str:
    return "".join(json.dumps(r.to_json(), sort_keys=True, ensure_ascii=False) + "\n" for r in records)


def load_records(path: str | Path) -> list[TweetRecord]:
    """Load a persisted corpus, trusting its stored window labels."""
    out = []
    for line in FileRecordProvider(Path(path)).lines():
        if not line.strip():
            continue
        obj = json.loads(line)
        out.append(
            TweetRecord(
                obj["id"],
                int(obj["created_at"]),
                obj["author_id"],
                obj.get("retweeted_author_id"),
                frozenset(obj.get("hashtags", [])),
                obj.get("window"),
            )
        )
    return out


def upsert_users(
    records: Iterable[TweetRecord], existing: Mapping[str, UserProfile] | None = None
) -> dict[str, UserProfile]:
    """Merge every author and retweeted author into a copy of the index.

    ``last_updated`` moves to the newest record time seen for the user and
    never decreases.
    """
    index = dict(existing or {})
    latest: dict[str, int] = {}
    for r in records:
        for uid in (r.author_id, r.retweeted_author_id):
            if uid is not None:
                latest[uid] = max(latest.get(uid, r.created_at), r.created_at)
    for uid, t in latest.items():
        prof = index.get(uid)
        if prof is None:
            index[uid] = UserProfile(uid, uid, None, t)
        else:
            index[uid] = replace(prof, last_updated=max(prof.last_updated, t))
    return dict(sorted(index.items()))


def dump_users(index: Mapping[str, UserProfile]) -> str:
    return "".join(json.dumps(p.to_json(), sort_keys=True) + "\n" for _, p in sorted(index.items()))


def load_users(path: str | Path) -> dict[str, UserProfile]:
    path = Path(path)
    if not path.exists():
        return {}
    index = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            obj = json.loads(line)
            index[obj["user_id"]] = UserProfile(
                obj["user_id"], obj.get("handle") or obj["user_id"], obj.get("follower_count"), int(obj.get("last_updated", 0))
            )
    return index


@dataclass
class CorpusSummary:
    per_window: dict[str, tuple[int, int]] = field(default_factory=dict)  # label -> (tweets, users)
    outside_tweets: int = 0

    def rows(self, schedule: WindowSchedule | None = None):
        for label, (tweets, users) in self.per_window.items():
            if schedule is not None:
                w = schedule.window(label)
                yield label, format_timestamp(w.start), format_timestamp(w.end), users, tweets
            else:
                yield label, "", "", users, tweets


def corpus_summary(records: Iterable[TweetRecord], schedule: WindowSchedule | None = None) -> CorpusSummary:
    tweets: dict[str, int] = defaultdict(int)
    users: dict[str, set[str]] = defaultdict(set)
    outside = 0
    for r in records:
        if r.window_label is None:
            outside += 1
            continue
        tweets[r.window_label] += 1
        users[r.window_label].add(r.author_id)
    labels = schedule.labels if schedule is not None else sorted(tweets)
    per_window = {lab: (tweets.get(lab, 0), len(users.get(lab, ()))) for lab in labels}
    return CorpusSummary(per_window, outside)
