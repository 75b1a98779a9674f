"""Removal of markup, templates and signatures from posts, and token normalization.

The stages run in a fixed order::

    strip_markup -> canonicalize_links -> remove_templates -> remove_signatures -> normalize

Links into the ``User:``/``User talk:`` namespaces are left alone by
:func:`canonicalize_links`; they belong to signatures and are resolved by
:func:`remove_signatures`.
"""

from __future__ import annotations

import html
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime
from importlib import resources

from sklearn.base import BaseEstimator, TransformerMixin

from .timeutil import format_timestamp, parse_timestamp

logger = logging.getLogger(__name__)

CANONICAL_LINK_RE = re.compile(r"^(?:WP|Wikipedia)[A-Z0-9][A-Za-z0-9]*$")
TOKEN_RE = re.compile(r"^[a-z]+$")


def is_valid_token(token: str) -> bool:
    return bool(TOKEN_RE.match(token) or CANONICAL_LINK_RE.match(token))


def is_bot(username: str) -> bool:
    """Bot accounts follow the naming policy: the name ends in ``Bot`` (case-sensitive)."""
    return username.endswith("Bot")


def load_patterns(path: str | None = None, *, default: str | None = None) -> list[re.Pattern]:
    """Read a pattern file: one regular expression per line, ``#`` starts a comment line."""
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = resources.files("afdforge").joinpath(f"data/{default}").read_text("utf-8")
    patterns = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            patterns.append(re.compile(line, re.IGNORECASE | re.DOTALL))
    return patterns


def _tidy(text: str) -> str:
    text = re.sub(r"[^\S\n]+", " ", text)
    text = re.sub(r" *\n *", "\n", text)
    return text.strip()


# --- markup ------------------------------------------------------------------

_COMMENT_RE = re.compile(r"<!--.*?(?:-->|$)", re.DOTALL)
_TAG_RE = re.compile(r"</?[A-Za-z][A-Za-z0-9]*(?:\s[^<>]*)?/?>")
_EMPHASIS_RE = re.compile(r"'{2,}")
_HEADING_RE = re.compile(r"={2,}")
_BULLET_RE = re.compile(r"^[*#:;]+", re.MULTILINE)
_HRULE_RE = re.compile(r"-{4,}")
_TABLE_RE = re.compile(r"(?<!\{)\{\||\|\}(?!\})|\|\+|\|-+|\|\||!!")
_MAGIC_RE = re.compile(r"__[A-Z]+__")


def strip_markup(text: str) -> str:
    """Drop HTML tags (keeping their contents) and wikitext formatting.

    Each tag is removed on its own, so an unmatched opening or closing tag
    costs only the tag text itself.
    """
    text = _COMMENT_RE.sub(" ", text)
    text = _TAG_RE.sub(" ", text)
    text = _EMPHASIS_RE.sub("", text)
    text = _HEADING_RE.sub(" ", text)
    text = _BULLET_RE.sub("", text)
    text = _HRULE_RE.sub(" ", text)
    text = _TABLE_RE.sub(" ", text)
    text = _MAGIC_RE.sub(" ", text)
    return _tidy(html.unescape(text))


# --- links -------------------------------------------------------------------

_INTERNAL_RE = re.compile(r"\[\[([^\[\]|]*)(?:\|([^\[\]]*))?\]\]")
_EXTERNAL_RE = re.compile(
    r"\[(?:https?:|ftp:|mailto:|news:|irc:|//)[^\s\]|]*(?:[\s|]+([^\]]*))?\]", re.IGNORECASE
)
_BARE_URL_RE = re.compile(r"(?:\b(?:https?|ftp)://|\bwww\.)[^\s\[\]<>]+", re.IGNORECASE)
_PROJECT_NS = {"wikipedia": "Wikipedia", "wp": "WP", "project": "Wikipedia"}
_SIGNATURE_NS = {"user", "user talk", "special"}
_HIDDEN_NS = {"category", "file", "image", "media"}


def _ns_split(target: str) -> tuple[str, str]:
    ns, sep, page = target.partition(":")
    if not sep:
        return "", target
    return ns.strip().replace("_", " ").lower(), page.strip()


def canonical_link_token(namespace: str, page: str) -> str:
    page = re.sub(r"[^A-Za-z0-9]", "", page)
    if page:
        page = page[0].upper() + page[1:]
    return _PROJECT_NS[namespace] + page


def _same_text(a: str, b: str) -> bool:
    return " ".join(a.replace("_", " ").split()).lower() == " ".join(b.replace("_", " ").split()).lower()


def _internal_link(m: re.Match) -> str:
    raw_target, label = m.group(1), m.group(2)
    colon = raw_target.lstrip().startswith(":")
    target = raw_target.strip().lstrip(":").strip()
    ns, page = _ns_split(target)
    if ns in _PROJECT_NS:
        token = canonical_link_token(ns, page)
        if label is not None and label.strip() and not (_same_text(label, target) or _same_text(label, page)):
            return f" {token} {label} "
        return f" {token} "
    if ns in _SIGNATURE_NS:
        return m.group(0)
    if ns in _HIDDEN_NS and not colon:
        if ns == "category" or label is None:
            return " "
        return " " + label.split("|")[-1] + " "
    if label is not None and label.strip():
        return f" {label} "
    return f" {target} "


def canonicalize_links(text: str) -> str:
    """Resolve wiki and external links to the words a reader would see.

    Project-namespace links (``Wikipedia:``/``WP:``) collapse to a single
    token such as ``WPNPA``; a label is kept only when it differs from the
    link target. External URIs are dropped, their labels kept.
    """
    text = _EXTERNAL_RE.sub(lambda m: f" {m.group(1) or ''} ", text)
    while True:
        new = _INTERNAL_RE.sub(_internal_link, text)
        if new == text:
            break
        text = new
    text = _BARE_URL_RE.sub(" ", text)
    return _tidy(text)


# --- templates ---------------------------------------------------------------


@dataclass
class CleanStats:
    unbalanced_templates: int = 0


def _remove_transclusions(text: str, stats: CleanStats | None) -> str:
    out = []
    i = 0
    n = len(text)
    depth = 0
    start = 0
    while i < n:
        if text.startswith("{{", i):
            if depth == 0:
                start = i
            depth += 1
            i += 2
        elif text.startswith("}}", i):
            if depth > 0:
                depth -= 1
                if depth == 0:
                    out.append(" ")
            i += 2
        else:
            if depth == 0:
                out.append(text[i])
            i += 1
        if i >= n and depth > 0:
            # Unbalanced: drop from the outermost opening to the end of its line.
            if stats is not None:
                stats.unbalanced_templates += 1
            logger.debug("unbalanced template braces at offset %d", start)
            eol = text.find("\n", start)
            if eol < 0:
                break
            depth = 0
            i = eol
    return "".join(out)


def remove_templates(text: str, patterns: list[re.Pattern] | None = None, stats: CleanStats | None = None) -> str:
    """Remove ``{{...}}`` transclusions (nesting-aware) and substituted AfD boilerplate."""
    if patterns is None:
        patterns = default_template_patterns()
    text = _remove_transclusions(text, stats)
    for pat in patterns:
        text = pat.sub(" ", text)
    return _tidy(text)


# --- signatures --------------------------------------------------------------

_USER_LINK = r"\[\[\s*(?:User(?:[ _]talk)?:|Special:Contributions/)[^\[\]]*\]\]"
_UTC_STAMP = r"\d{1,2}:\d{2},?\s+\d{1,2}\s+[A-Za-z]+\s+\d{4}\s*\(UTC\)"
_SIGNATURE_RE = re.compile(_USER_LINK + r"[^\n]{0,300}?" + _UTC_STAMP, re.IGNORECASE)
_STAMP_RE = re.compile(_UTC_STAMP, re.IGNORECASE)
_USER_LINK_RE = re.compile(
    r"\[\[\s*(?:User(?:[ _]talk)?:|Special:Contributions/)([^\[\]|]*)(?:\|([^\[\]]*))?\]\]", re.IGNORECASE
)


def remove_signatures(text: str, patterns: list[re.Pattern] | None = None) -> str:
    """Remove standard signatures (user link ... ``(UTC)``) and custom signature patterns.

    A signature spans from its user-page link to the nearest following
    ``(UTC)`` timestamp. Any leftover ``(UTC)`` timestamps are dropped and
    user links outside signatures are reduced to their visible text.
    """
    if patterns is None:
        patterns = default_signature_patterns()
    text = _SIGNATURE_RE.sub(" ", text)
    for pat in patterns:
        text = pat.sub(" ", text)
    text = _STAMP_RE.sub(" ", text)
    text = _USER_LINK_RE.sub(lambda m: f" {m.group(2) if m.group(2) else m.group(1)} ", text)
    return _tidy(text)


# --- normalization -----------------------------------------------------------

_NON_ALPHA_RE = re.compile(r"[^a-z]+")


def normalize(text: str) -> list[str]:
    """Lowercase words with every non-letter removed; canonical link tokens pass through."""
    tokens = []
    for raw in text.split():
        if CANONICAL_LINK_RE.match(raw):
            tokens.append(raw)
            continue
        word = _NON_ALPHA_RE.sub("", raw.lower())
        if word:
            tokens.append(word)
    return tokens


_DEFAULT_PATTERNS: dict[str, list[re.Pattern]] = {}


def default_template_patterns() -> list[re.Pattern]:
    if "afd" not in _DEFAULT_PATTERNS:
        _DEFAULT_PATTERNS["afd"] = load_patterns(default="afd_patterns.txt")
    return _DEFAULT_PATTERNS["afd"]


def default_signature_patterns() -> list[re.Pattern]:
    if "sig" not in _DEFAULT_PATTERNS:
        _DEFAULT_PATTERNS["sig"] = load_patterns(default="signature_patterns.txt")
    return _DEFAULT_PATTERNS["sig"]


def clean_text(
    text: str,
    template_patterns: list[re.Pattern] | None = None,
    signature_patterns: list[re.Pattern] | None = None,
    stats: CleanStats | None = None,
) -> list[str]:
    text = strip_markup(text)
    text = canonicalize_links(text)
    text = remove_templates(text, template_patterns, stats)
    text = remove_signatures(text, signature_patterns)
    return normalize(text)


@dataclass
class CleanPost:
    page_title: str
    author: str
    revision_id: int
    timestamp: datetime
    tokens: list[str] = field(default_factory=list)

    @property
    def token_count(self) -> int:
        return len(self.tokens)

    def to_dict(self) -> dict:
        return {
            "page": self.page_title,
            "author": self.author,
            "rev": self.revision_id,
            "ts": format_timestamp(self.timestamp),
            "tokens": list(self.tokens),
            "clean": True,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CleanPost:
        return cls(d["page"], d["author"], int(d["rev"]), parse_timestamp(d["ts"]), list(d["tokens"]))


def clean_post(post, template_patterns=None, signature_patterns=None, stats=None) -> CleanPost:
    tokens = clean_text(" ".join(post.raw_tokens), template_patterns, signature_patterns, stats)
    return CleanPost(post.page_title, post.author, post.revision_id, post.timestamp, tokens)


class TextCleaner(TransformerMixin, BaseEstimator):
    """Stateless transformer from raw wikitext strings to normalized token lists."""

    def __init__(self, template_patterns_path=None, signature_patterns_path=None):
        self.template_patterns_path = template_patterns_path
        self.signature_patterns_path = signature_patterns_path

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        tpl = load_patterns(self.template_patterns_path) if self.template_patterns_path else None
        sig = load_patterns(self.signature_patterns_path) if self.signature_patterns_path else None
        return [clean_text(x, tpl, sig) for x in X]
