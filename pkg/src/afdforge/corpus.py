"""Annotated data set construction: timeframe labels, sliding windows, balancing.

A post is disruptive when its author is blocked at most ``timeframe`` after
writing it (the bound is inclusive). Only the author's nearest block strictly
after the post counts.
"""

from __future__ import annotations

import bisect
import json
import math
import random
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import TextIO

from .ingest import BlockEvent
from .textclean import CleanPost
from .timeutil import format_timestamp, parse_timestamp

DISRUPTIVE = "disruptive"
CONSTRUCTIVE = "constructive"
_LABEL_NAMES = {1: DISRUPTIVE, 0: CONSTRUCTIVE}
_LABEL_VALUES = {DISRUPTIVE: 1, CONSTRUCTIVE: 0}


@dataclass
class LabeledPost:
    post: CleanPost
    label: int  # 1 disruptive, 0 constructive
    delta: timedelta | None = None
    block_time: datetime | None = None  # nearest later block of the author

    @property
    def disruptive(self) -> bool:
        return self.label == 1

    @property
    def author(self) -> str:
        return self.post.author

    @property
    def timestamp(self) -> datetime:
        return self.post.timestamp

    @property
    def tokens(self) -> list[str]:
        return self.post.tokens

    def to_dict(self) -> dict:
        d = self.post.to_dict()
        d["label"] = _LABEL_NAMES[self.label]
        d["delta_seconds"] = None if self.delta is None else self.delta.total_seconds()
        d["block_ts"] = None if self.block_time is None else format_timestamp(self.block_time)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> LabeledPost:
        delta = d.get("delta_seconds")
        block = d.get("block_ts")
        return cls(
            CleanPost.from_dict(d),
            _LABEL_VALUES[d["label"]],
            None if delta is None else timedelta(seconds=delta),
            None if block is None else parse_timestamp(block),
        )


@dataclass
class MergedPost:
    author: str
    member_post_ids: list[int]
    tokens: list[str]
    label: int
    window_start: datetime
    window_end: datetime
    delta: timedelta | None = None  # of the last member
    pages: list[str] = field(default_factory=list)

    @property
    def disruptive(self) -> bool:
        return self.label == 1

    @property
    def timestamp(self) -> datetime:
        return self.window_start

    def to_dict(self) -> dict:
        return {
            "author": self.author,
            "members": list(self.member_post_ids),
            "pages": list(self.pages),
            "tokens": list(self.tokens),
            "label": _LABEL_NAMES[self.label],
            "delta_seconds": None if self.delta is None else self.delta.total_seconds(),
            "window_start": format_timestamp(self.window_start),
            "window_end": format_timestamp(self.window_end),
        }

    @classmethod
    def from_dict(cls, d: dict) -> MergedPost:
        delta = d.get("delta_seconds")
        return cls(
            d["author"],
            [int(m) for m in d["members"]],
            list(d["tokens"]),
            _LABEL_VALUES[d["label"]],
            parse_timestamp(d["window_start"]),
            parse_timestamp(d["window_end"]),
            None if delta is None else timedelta(seconds=delta),
            list(d.get("pages", [])),
        )


def _block_times(blocks: Iterable[BlockEvent]) -> dict[str, list[datetime]]:
    by_user: dict[str, list[datetime]] = defaultdict(list)
    for b in blocks:
        by_user[b.blocked_user].append(b.timestamp)
    for times in by_user.values():
        times.sort()
    return by_user


def _next_block(times: list[datetime], ts: datetime) -> datetime | None:
    k = bisect.bisect_right(times, ts)
    return times[k] if k < len(times) else None


def label_posts(posts: Iterable[CleanPost], blocks: Iterable[BlockEvent], timeframe: timedelta) -> list[LabeledPost]:
    """Label each post by the gap to its author's earliest block strictly after it."""
    by_user = _block_times(blocks)
    out = []
    for post in posts:
        block = _next_block(by_user.get(post.author, []), post.timestamp)
        if block is None:
            out.append(LabeledPost(post, 0))
            continue
        delta = block - post.timestamp
        out.append(LabeledPost(post, int(delta <= timeframe), delta, block))
    return out


def relabel(posts: Iterable[LabeledPost], timeframe: timedelta) -> list[LabeledPost]:
    """Apply a new timeframe to already labeled posts (deltas are kept)."""
    return [
        LabeledPost(p.post, int(p.delta is not None and p.delta <= timeframe), p.delta, p.block_time) for p in posts
    ]


def _same_block(a: LabeledPost, b: LabeledPost) -> bool:
    return a.author == b.author and a.block_time is not None and a.block_time == b.block_time


def _chrono_key(p: LabeledPost):
    return (p.timestamp, p.post.revision_id)


def sliding_window_merge(posts: Sequence[LabeledPost], window: timedelta) -> list[MergedPost]:
    """One merged post per starting post of a single author.

    A window takes every later post within ``window`` of its first member,
    but never grows past a disruptive member unless the next post is
    disruptive by the same block.
    """
    posts = sorted(posts, key=_chrono_key)
    if len({p.author for p in posts}) > 1:
        raise ValueError("sliding_window_merge expects the posts of a single author")
    merged = []
    for s, first in enumerate(posts):
        members = [first]
        for nxt in posts[s + 1:]:
            if nxt.timestamp - first.timestamp > window:
                break
            last = members[-1]
            if last.disruptive and not (nxt.disruptive and _same_block(last, nxt)):
                break
            members.append(nxt)
        merged.append(
            MergedPost(
                first.author,
                [m.post.revision_id for m in members],
                [t for m in members for t in m.tokens],
                int(any(m.disruptive for m in members)),
                first.timestamp,
                members[-1].timestamp,
                members[-1].delta,
                [m.post.page_title for m in members],
            )
        )
    return merged


def merge_all(posts: Iterable[LabeledPost], window: timedelta) -> list[MergedPost]:
    """Sliding-window merge per author, ordered by (author, window start)."""
    by_author: dict[str, list[LabeledPost]] = defaultdict(list)
    for p in posts:
        by_author[p.author].append(p)
    out = []
    for author in sorted(by_author):
        out.extend(sliding_window_merge(by_author[author], window))
    return out


def _time_of(p) -> datetime:
    return p.timestamp


def balance_sample(posts: Sequence, strategy: str = "random", seed: int = 0, per_class: int | None = None) -> list:
    """Equal numbers of disruptive and constructive posts, in input order.

    By default every disruptive post is kept and as many constructive posts
    are chosen, either uniformly at random (``seed``) or the oldest ones
    (``chronological``). ``per_class`` fixes the size of both classes
    instead; disruptive posts are then subsampled the same way.
    """
    if strategy not in ("random", "chronological"):
        raise ValueError(f"unknown sampling strategy {strategy!r}")
    pos = [i for i, p in enumerate(posts) if p.label == 1]
    neg = [i for i, p in enumerate(posts) if p.label == 0]
    n = len(pos) if per_class is None else per_class
    if n > len(pos):
        raise ValueError(f"need {n} disruptive posts, have {len(pos)}")
    if n > len(neg):
        raise ValueError(f"need {n} constructive posts, have {len(neg)}")
    rng = random.Random(seed)

    def pick(indices: list[int]) -> list[int]:
        if n == len(indices):
            return indices
        if strategy == "chronological":
            return sorted(indices, key=lambda i: (_time_of(posts[i]), i))[:n]
        return rng.sample(indices, n)

    chosen = set(pick(pos)) | set(pick(neg))
    return [posts[i] for i in sorted(chosen)]


def delta_distribution(
    posts: Iterable, blocks: Iterable[BlockEvent], horizon: timedelta, bucket: timedelta
) -> list[tuple[int, int]]:
    """Histogram of (block time - author's last post before the block).

    Every (author, block) pair counts once, using the author's latest post
    strictly before that block. Buckets cover ``[0, horizon)``.
    """
    if bucket <= timedelta(0) or horizon <= timedelta(0):
        raise ValueError("horizon and bucket must be positive")
    by_author: dict[str, list[datetime]] = defaultdict(list)
    for p in posts:
        p = getattr(p, "post", p)
        by_author[p.author].append(p.timestamp)
    for times in by_author.values():
        times.sort()
    size = bucket.total_seconds()
    n_buckets = math.ceil(horizon.total_seconds() / size)
    counts = [0] * n_buckets
    for b in blocks:
        times = by_author.get(b.blocked_user)
        if not times:
            continue
        k = bisect.bisect_left(times, b.timestamp)
        if k == 0:
            continue
        delta = b.timestamp - times[k - 1]
        if delta >= horizon:
            continue
        counts[int(delta.total_seconds() // size)] += 1
    return [(int(i * size), c) for i, c in enumerate(counts)]


def write_histogram_csv(rows: Iterable[tuple[int, int]], fh: TextIO) -> None:
    fh.write("bucket_start_seconds,count\n")
    for start, count in rows:
        fh.write(f"{start},{count}\n")


def write_jsonl(records: Iterable, fh: TextIO) -> None:
    for r in records:
        fh.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")


def read_jsonl(fh: TextIO, kind=LabeledPost) -> list:
    return [kind.from_dict(json.loads(line)) for line in fh if line.strip()]


def read_corpus(fh: TextIO) -> list:
    """Read labeled or merged posts, telling them apart by their fields."""
    out = []
    for line in fh:
        if not line.strip():
            continue
        d = json.loads(line)
        out.append(MergedPost.from_dict(d) if "members" in d else LabeledPost.from_dict(d))
    return out
