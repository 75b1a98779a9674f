"""Block-log reduction to blocks plausibly caused by communication style."""

from __future__ import annotations

import ipaddress
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from importlib import resources
from typing import TypeVar

from .ingest import BlockEvent

T = TypeVar("T")

MODES = ("blacklist", "whitelist")


def is_ip_address(username: str) -> bool:
    try:
        ipaddress.ip_address(username.strip())
    except ValueError:
        return False
    return True


def _username(record) -> str:
    if isinstance(record, BlockEvent):
        return record.blocked_user
    if isinstance(record, str):
        return record
    return getattr(record, "author")


def drop_anonymous(records: Iterable[T]) -> list[T]:
    """Remove block events (or posts) whose user name is an IPv4/IPv6 address."""
    return [r for r in records if not is_ip_address(_username(r))]


@dataclass(frozen=True)
class TermList:
    """Case-insensitive comment matchers.

    Plain lines match as substrings of the lowercased comment; lines written
    as ``/regex/`` are compiled as case-insensitive regular expressions.
    """

    terms: tuple[str, ...]

    @classmethod
    def parse(cls, text: str) -> TermList:
        terms = []
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                terms.append(line)
        return cls(tuple(terms))

    @classmethod
    def load(cls, path: str) -> TermList:
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    @classmethod
    def default(cls, mode: str) -> TermList:
        _check_mode(mode)
        text = resources.files("afdforge").joinpath(f"data/block_{mode}.txt").read_text("utf-8")
        return cls.parse(text)

    def __post_init__(self):
        matchers = []
        for term in self.terms:
            if len(term) > 2 and term.startswith("/") and term.endswith("/"):
                matchers.append(re.compile(term[1:-1], re.IGNORECASE))
            else:
                matchers.append(re.compile(re.escape(term.lower()), re.IGNORECASE))
        object.__setattr__(self, "_matchers", tuple(matchers))

    def matching(self, comment: str) -> list[str]:
        return [t for t, m in zip(self.terms, self._matchers) if m.search(comment)]

    def matches(self, comment: str) -> bool:
        return any(m.search(comment) for m in self._matchers)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown block filter mode {mode!r}; expected one of {MODES}")


def filter_blocks(
    events: Sequence[BlockEvent], mode: str = "blacklist", terms: TermList | None = None
) -> list[BlockEvent]:
    """Keep blocks whose comment suggests disruptive communication.

    ``blacklist`` drops comments naming bot malfunction, tests, self-requested
    blocks, copyright or sourcing problems; ``whitelist`` keeps only comments
    naming attacks, harassment, vandalism, hating or legal threats.
    """
    _check_mode(mode)
    if terms is None:
        terms = TermList.default(mode)
    if mode == "blacklist":
        return [e for e in events if not terms.matches(e.comment)]
    return [e for e in events if terms.matches(e.comment)]
