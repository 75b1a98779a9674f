"""Token-level authorship for page histories and per-revision post extraction.

A simplified WikiWho: every revision is aligned against its predecessor,
first by matching identical lines (so moved paragraphs keep their author
whole) and then with a longest-common-subsequence diff over the remaining
tokens. Exact reverts are found by hashing the token sequence of every
earlier revision, and tokens that disappeared in an earlier edit are
remembered so restored text keeps its author.
"""

from __future__ import annotations

import difflib
import hashlib
from collections import defaultdict, deque
from collections.abc import Iterable
from dataclasses import dataclass
from datetime import datetime

from .blockfilter import is_ip_address
from .ingest import PageHistory
from .textclean import is_bot
from .timeutil import format_timestamp, parse_timestamp

# Below this many tokens, a re-inserted run must be restored in full to keep its origin.
MIN_MOVE_TOKENS = 6
# Cap on remembered deleted runs per page.
MAX_GRAVEYARD = 500
# DP cells allowed for an exact LCS before falling back to difflib's block matcher.
MAX_LCS_CELLS = 1_000_000


@dataclass(frozen=True)
class AttributedToken:
    token: str
    origin_revision: int
    origin_author: str | None
    position: int


@dataclass
class RawPost:
    page_title: str
    author: str
    revision_id: int
    timestamp: datetime
    raw_tokens: list[str]

    def to_dict(self) -> dict:
        return {
            "page": self.page_title,
            "author": self.author,
            "rev": self.revision_id,
            "ts": format_timestamp(self.timestamp),
            "tokens": list(self.raw_tokens),
        }

    @classmethod
    def from_dict(cls, d: dict) -> RawPost:
        return cls(d["page"], d["author"], int(d["rev"]), parse_timestamp(d["ts"]), list(d["tokens"]))


def tokenize(text: str) -> list[str]:
    return text.split()


def tokenize_lines(text: str) -> list[list[str]]:
    """Tokens grouped by source line; flattening gives :func:`tokenize`."""
    return [line.split() for line in text.splitlines()]


def lcs_pairs(a: list[str], b: list[str]) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)`` of a longest common subsequence of ``a`` and ``b``."""
    lo = 0
    while lo < len(a) and lo < len(b) and a[lo] == b[lo]:
        lo += 1
    hi_a, hi_b = len(a), len(b)
    while hi_a > lo and hi_b > lo and a[hi_a - 1] == b[hi_b - 1]:
        hi_a -= 1
        hi_b -= 1
    pairs = [(i, i) for i in range(lo)]
    mid_a, mid_b = a[lo:hi_a], b[lo:hi_b]
    if mid_a and mid_b:
        if len(mid_a) * len(mid_b) <= MAX_LCS_CELLS:
            mid = _lcs_dp(mid_a, mid_b)
        else:
            sm = difflib.SequenceMatcher(None, mid_a, mid_b, autojunk=False)
            mid = [(blk.a + k, blk.b + k) for blk in sm.get_matching_blocks() for k in range(blk.size)]
        pairs.extend((i + lo, j + lo) for i, j in mid)
    pairs.extend((hi_a + k, hi_b + k) for k in range(len(a) - hi_a))
    return pairs


def align_lines(old_lines: list[list[str]], new_lines: list[list[str]]) -> list[tuple[int, int]]:
    """Token index pairs matching ``old`` to ``new`` (both given as token lines).

    Identical lines are paired first, each old line used at most once and in
    order of appearance; the leftover tokens are aligned by :func:`lcs_pairs`.
    Indices refer to the flattened token sequences.
    """
    pool: dict[tuple[str, ...], deque[int]] = defaultdict(deque)
    old_start = []
    pos = 0
    for k, line in enumerate(old_lines):
        old_start.append(pos)
        pos += len(line)
        if line:
            pool[tuple(line)].append(k)
    pairs = []
    used_old: set[int] = set()
    used_new: set[int] = set()
    pos = 0
    for line in new_lines:
        candidates = pool.get(tuple(line)) if line else None
        if candidates:
            k = candidates.popleft()
            for off in range(len(line)):
                pairs.append((old_start[k] + off, pos + off))
                used_old.add(old_start[k] + off)
                used_new.add(pos + off)
        pos += len(line)
    old_flat = [t for line in old_lines for t in line]
    new_flat = [t for line in new_lines for t in line]
    rest_old = [i for i in range(len(old_flat)) if i not in used_old]
    rest_new = [j for j in range(len(new_flat)) if j not in used_new]
    for i, j in lcs_pairs([old_flat[i] for i in rest_old], [new_flat[j] for j in rest_new]):
        pairs.append((rest_old[i], rest_new[j]))
    return pairs


def _lcs_dp(a: list[str], b: list[str]) -> list[tuple[int, int]]:
    n, m = len(a), len(b)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = table[i], table[i + 1]
        ai = a[i]
        for j in range(m - 1, -1, -1):
            if ai == b[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = row[j + 1] if row[j + 1] >= below[j] else below[j]
    pairs = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def _runs(indices: Iterable[int]) -> list[list[int]]:
    runs: list[list[int]] = []
    for idx in indices:
        if runs and runs[-1][-1] == idx - 1:
            runs[-1].append(idx)
        else:
            runs.append([idx])
    return runs


def _sequence_hash(tokens: list[str]) -> str:
    return hashlib.sha1("\x1f".join(tokens).encode("utf-8")).hexdigest()


def attribute_tokens(history: PageHistory) -> list[list[AttributedToken]]:
    """Attribute every token of every revision to the revision that introduced it."""
    result: list[list[AttributedToken]] = []
    # Internally an origin is (revision id, author, index in that revision), so
    # every token instance has an identity and can be alive at most once.
    all_origins: list[list[tuple]] = []
    seen: dict[str, int] = {}
    graveyard: list[tuple[list[str], list[tuple]]] = []
    prev_tokens: list[str] = []
    prev_lines: list[list[str]] = []
    prev_origins: list[tuple] = []
    missing = object()

    for idx, rev in enumerate(history.revisions):
        lines = tokenize_lines(rev.full_text)
        tokens = [t for line in lines for t in line]
        digest = _sequence_hash(tokens)
        pairs = align_lines(prev_lines, lines)
        matched_old = {i for i, _ in pairs}
        for run in reversed(_runs(i for i in range(len(prev_tokens)) if i not in matched_old)):
            graveyard.insert(0, ([prev_tokens[i] for i in run], [prev_origins[i] for i in run]))
        del graveyard[MAX_GRAVEYARD:]

        if digest in seen:
            origins = list(all_origins[seen[digest]])
        else:
            origins: list = [missing] * len(tokens)
            for i, j in pairs:
                origins[j] = prev_origins[i]
            alive = {o for o in origins if o is not missing}
            for run in _runs(j for j in range(len(tokens)) if origins[j] is missing):
                _restore_from_graveyard(run, tokens, origins, graveyard, alive, missing)
            origins = [(rev.revision_id, rev.author, j) if o is missing else o for j, o in enumerate(origins)]
            seen[digest] = idx

        all_origins.append(origins)
        result.append(
            [AttributedToken(tok, o[0], o[1], pos) for pos, (tok, o) in enumerate(zip(tokens, origins))]
        )
        prev_tokens, prev_origins, prev_lines = tokens, origins, lines
    return result


def _restore_from_graveyard(run, tokens, origins, graveyard, alive, missing) -> None:
    run_tokens: list = [tokens[j] for j in run]
    for dead_tokens, dead_origins in graveyard:
        if all(t is missing for t in run_tokens):
            return
        # Tokens already alive in this revision (matched or restored) cannot come back twice.
        candidates = [None if o in alive else t for t, o in zip(dead_tokens, dead_origins)]
        sm = difflib.SequenceMatcher(None, candidates, run_tokens, autojunk=False)
        for blk in sm.get_matching_blocks():
            if blk.size == 0:
                continue
            if blk.size < MIN_MOVE_TOKENS and blk.size != len(run):
                continue
            for k in range(blk.size):
                origin = dead_origins[blk.a + k]
                origins[run[blk.b + k]] = origin
                run_tokens[blk.b + k] = missing
                alive.add(origin)


def is_registered(author: str | None) -> bool:
    return bool(author) and not is_ip_address(author)


def extract_posts(history: PageHistory, attributed: list[list[AttributedToken]] | None = None) -> list[RawPost]:
    """One post per revision: the tokens that revision introduced, in document order.

    Anonymous (IP or missing) authors and bot accounts yield no posts, nor do
    revisions that introduced nothing new.
    """
    if attributed is None:
        attributed = attribute_tokens(history)
    posts = []
    for rev, toks in zip(history.revisions, attributed):
        if not is_registered(rev.author) or is_bot(rev.author):
            continue
        new = [t.token for t in toks if t.origin_revision == rev.revision_id and t.origin_author == rev.author]
        if new:
            posts.append(RawPost(history.title, rev.author, rev.revision_id, rev.timestamp, new))
    return posts
