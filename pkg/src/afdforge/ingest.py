"""Streaming readers for MediaWiki page-history exports and block logs.

Both readers consume decompressed byte streams; :func:`open_maybe_compressed`
is the wrapper that handles ``.bz2``/``.gz`` files.
"""

from __future__ import annotations

import bz2
import gzip
import io
import logging
import xml.parsers.expat
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime
from typing import BinaryIO, Iterator

from .timeutil import format_timestamp, parse_timestamp

logger = logging.getLogger(__name__)

AFD_PREFIX = "Wikipedia:Articles for deletion/"
_CHUNK = 1 << 16


class DumpParseError(ValueError):
    """Malformed XML in a dump; ``offset`` is the byte position of the error."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class TruncatedDumpError(DumpParseError):
    """The stream ended inside an element; complete pages were already yielded."""

    def __init__(self, message: str, offset: int, pages_yielded: int):
        super().__init__(message, offset)
        self.pages_yielded = pages_yielded


@dataclass
class Revision:
    revision_id: int
    timestamp: datetime
    author: str | None
    full_text: str

    def to_dict(self) -> dict:
        return {
            "id": self.revision_id,
            "ts": format_timestamp(self.timestamp),
            "author": self.author,
            "text": self.full_text,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Revision:
        return cls(int(d["id"]), parse_timestamp(d["ts"]), d.get("author"), d.get("text", ""))


@dataclass
class PageHistory:
    title: str
    revisions: list[Revision] = field(default_factory=list)

    def __post_init__(self):
        if not self.title:
            raise ValueError("page title must be non-empty")
        self.revisions.sort(key=lambda r: (r.timestamp, r.revision_id))

    def to_dict(self) -> dict:
        return {"title": self.title, "revisions": [r.to_dict() for r in self.revisions]}

    @classmethod
    def from_dict(cls, d: dict) -> PageHistory:
        return cls(d["title"], [Revision.from_dict(r) for r in d["revisions"]])


@dataclass(frozen=True)
class BlockEvent:
    timestamp: datetime
    blocked_user: str
    admin_user: str
    admin_id: int
    comment: str = ""

    def __post_init__(self):
        if not self.blocked_user:
            raise ValueError("blocked_user must be non-empty")


@dataclass
class BlockLogStats:
    """Per-record outcome tallies of :func:`parse_block_log`."""

    records: int = 0
    emitted: int = 0
    skipped: int = 0
    rejected: int = 0


def open_maybe_compressed(path: str) -> BinaryIO:
    if path.endswith(".bz2"):
        return bz2.open(path, "rb")
    if path.endswith(".gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


def is_afd_title(title: str, title_prefix: str = AFD_PREFIX) -> bool:
    """Exact, case-sensitive prefix match that excludes the daily ``Log/`` pages."""
    return title.startswith(title_prefix) and not title.startswith(title_prefix + "Log/")


class _PageCollector:
    """expat callbacks assembling one ``<page>`` at a time."""

    def __init__(self, title_prefix: str):
        self.title_prefix = title_prefix
        self.stack: list[str] = []
        self.ready: deque[PageHistory] = deque()
        self._buf: list[str] = []
        self._reset_page()

    def _reset_page(self):
        self.title: str | None = None
        self.keep = False
        self.revisions: list[Revision] = []
        self.rev: dict | None = None

    def start(self, name, attrs):
        self.stack.append(name)
        self._buf = []
        if name == "page":
            self._reset_page()
        elif name == "revision" and self.keep:
            self.rev = {"id": None, "ts": None, "author": None, "text": ""}

    def chars(self, data):
        # Text is only buffered for the fields we need, and never for skipped pages.
        if self.stack and self.stack[-1] in ("title", "id", "timestamp", "username", "ip", "text"):
            if self.stack[-1] != "text" or self.keep:
                self._buf.append(data)

    def end(self, name):
        text = "".join(self._buf)
        self._buf = []
        parent = self.stack[-2] if len(self.stack) >= 2 else None
        self.stack.pop()
        if name == "title" and parent == "page":
            self.title = text
            self.keep = is_afd_title(text, self.title_prefix)
        elif self.rev is not None:
            if name == "id" and parent == "revision":
                self.rev["id"] = int(text)
            elif name == "timestamp" and parent == "revision":
                self.rev["ts"] = parse_timestamp(text)
            elif name in ("username", "ip") and parent == "contributor":
                self.rev["author"] = text
            elif name == "text" and parent == "revision":
                self.rev["text"] = text
            elif name == "revision":
                self.revisions.append(
                    Revision(self.rev["id"] or 0, self.rev["ts"], self.rev["author"], self.rev["text"])
                )
                self.rev = None
        if name == "page":
            if self.keep and self.title:
                self.ready.append(PageHistory(self.title, self.revisions))
            self._reset_page()


def stream_afd_pages(dump: BinaryIO, title_prefix: str = AFD_PREFIX) -> Iterator[PageHistory]:
    """Yield the AfD page histories of a pages-meta-history export.

    Only one page is held in memory at a time. Pages whose title does not
    carry ``title_prefix`` never have their revision text buffered.
    """
    collector = _PageCollector(title_prefix)
    parser = xml.parsers.expat.ParserCreate()
    parser.buffer_text = True
    parser.StartElementHandler = collector.start
    parser.EndElementHandler = collector.end
    parser.CharacterDataHandler = collector.chars
    yielded = 0
    consumed = 0
    while True:
        chunk = dump.read(_CHUNK)
        final = not chunk
        try:
            parser.Parse(chunk, final)
        except xml.parsers.expat.ExpatError as exc:
            while collector.ready:
                yielded += 1
                yield collector.ready.popleft()
            offset = parser.ErrorByteIndex if parser.ErrorByteIndex >= 0 else consumed
            if final and exc.code in (
                xml.parsers.expat.errors.codes[xml.parsers.expat.errors.XML_ERROR_NO_ELEMENTS],
                xml.parsers.expat.errors.codes[xml.parsers.expat.errors.XML_ERROR_UNCLOSED_TOKEN],
                xml.parsers.expat.errors.codes[xml.parsers.expat.errors.XML_ERROR_PARTIAL_CHAR],
            ) and consumed > 0:
                raise TruncatedDumpError("truncated dump", offset, yielded) from exc
            raise DumpParseError(xml.parsers.expat.ErrorString(exc.code), offset) from exc
        consumed += len(chunk)
        while collector.ready:
            yielded += 1
            yield collector.ready.popleft()
        if final:
            break


# --- block log -------------------------------------------------------------

_BLOCK_ACTIONS = {"block"}
_KNOWN_ACTIONS = {"block", "unblock", "reblock"}


def _unescape_tsv(value: str) -> str:
    out = []
    i = 0
    while i < len(value):
        c = value[i]
        if c == "\\" and i + 1 < len(value):
            nxt = value[i + 1]
            out.append({"t": "\t", "n": "\n", "\\": "\\"}.get(nxt, "\\" + nxt))
            i += 2
            continue
        out.append(c)
        i += 1
    return "".join(out)


def escape_tsv(value: str) -> str:
    return value.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def _parse_block_tsv(text: str, stats: BlockLogStats) -> list[BlockEvent]:
    events = []
    # Only \n ends a record; comments may hold other Unicode line separators.
    for lineno, line in enumerate(text.split("\n"), 1):
        line = line.removesuffix("\r")
        if not line.strip() or line.startswith("#"):
            continue
        stats.records += 1
        parts = line.split("\t")
        if len(parts) < 4 or not parts[0].strip():
            stats.rejected += 1
            logger.warning("block log line %d rejected: missing fields", lineno)
            continue
        parts += [""] * (5 - len(parts))
        ts, user, admin, admin_id, comment = parts[:5]
        try:
            event = BlockEvent(
                parse_timestamp(ts),
                _unescape_tsv(user),
                _unescape_tsv(admin),
                int(admin_id) if admin_id.strip() else 0,
                _unescape_tsv(comment),
            )
        except ValueError as exc:
            stats.rejected += 1
            logger.warning("block log line %d rejected: %s", lineno, exc)
            continue
        events.append(event)
        stats.emitted += 1
    return events


def _parse_block_xml(data: bytes, stats: BlockLogStats) -> list[BlockEvent]:
    events: list[BlockEvent] = []
    stack: list[str] = []
    buf: list[str] = []
    item: dict = {}

    def start(name, attrs):
        nonlocal buf, item
        stack.append(name)
        buf = []
        if name == "logitem":
            item = {}

    def chars(data):
        buf.append(data)

    def end(name):
        nonlocal buf
        text = "".join(buf)
        buf = []
        parent = stack[-2] if len(stack) >= 2 else None
        stack.pop()
        if parent == "logitem" and name in ("timestamp", "comment", "type", "action", "logtitle"):
            item[name] = text
        elif parent == "contributor" and name in ("username", "id"):
            item["admin_" + name] = text
        elif name == "logitem":
            _emit(item)

    def _emit(item):
        stats.records += 1
        if item.get("type", "block") != "block" or item.get("action") not in _KNOWN_ACTIONS:
            stats.skipped += 1
            logger.warning("skipping log item with type=%r action=%r", item.get("type"), item.get("action"))
            return
        if item.get("action") not in _BLOCK_ACTIONS:
            stats.skipped += 1
            return
        if not item.get("timestamp"):
            stats.rejected += 1
            logger.warning("rejecting block log item without timestamp")
            return
        user = item.get("logtitle", "")
        for prefix in ("User:", "User talk:"):
            if user.startswith(prefix):
                user = user[len(prefix):]
        try:
            events.append(
                BlockEvent(
                    parse_timestamp(item["timestamp"]),
                    user,
                    item.get("admin_username", ""),
                    int(item.get("admin_id") or 0),
                    item.get("comment", ""),
                )
            )
        except ValueError as exc:
            stats.rejected += 1
            logger.warning("rejecting block log item: %s", exc)
            return
        stats.emitted += 1

    parser = xml.parsers.expat.ParserCreate()
    parser.buffer_text = True
    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(data, True)
    except xml.parsers.expat.ExpatError as exc:
        raise DumpParseError(xml.parsers.expat.ErrorString(exc.code), parser.ErrorByteIndex) from exc
    return events


def parse_block_log(source: BinaryIO | bytes | str, stats: BlockLogStats | None = None) -> list[BlockEvent]:
    """Read block actions from MediaWiki logging XML or the block-log TSV form.

    Unblock/reblock and non-block items are skipped; records without a
    timestamp are rejected. Tallies go into ``stats`` when one is given.
    """
    if stats is None:
        stats = BlockLogStats()
    if isinstance(source, str):
        data = source.encode("utf-8")
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    if data.lstrip()[:1] == b"<":
        return _parse_block_xml(data, stats)
    return _parse_block_tsv(data.decode("utf-8"), stats)


def write_block_tsv(events, fh: io.TextIOBase) -> None:
    for e in events:
        fh.write(
            "\t".join(
                [
                    format_timestamp(e.timestamp),
                    escape_tsv(e.blocked_user),
                    escape_tsv(e.admin_user),
                    str(e.admin_id),
                    escape_tsv(e.comment),
                ]
            )
            + "\n"
        )
