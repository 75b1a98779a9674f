"""Generalized (skip) n-gram language models with modified Kneser-Ney smoothing.

Patterns are bit strings over an n-gram window: ``1`` keeps a word, ``0``
is a wildcard. The last bit is the predicted word. Leading wildcards are
dropped, so ``0111`` is the same pattern as ``111``.

The full pattern (all ones, length ``order``) is estimated from raw counts
when ``order > 1``. Every other pattern, and the lone unigram pattern of an
order-1 model, uses continuation counts: the number of distinct words
seen immediately before an occurrence of the pattern. Each level is
interpolated with the uniform mixture of its child patterns, one child per
kept history position turned into a wildcard. Without skips the only child
is the one dropping the first word, which is the usual Kneser-Ney chain.
The unigram level is interpolated with the uniform distribution.
"""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ..validation import check_binary_labels, check_both_classes, check_documents

BOS = "<s>"
UNK = "<unk>"
SKIP = "_"
FALLBACK_DISCOUNT = 0.5


def normalize_pattern(bits: str) -> str:
    stripped = bits.lstrip("0")
    if not stripped.endswith("1"):
        raise ValueError(f"pattern {bits!r} must end in a kept word")
    return stripped


@lru_cache(maxsize=None)
def all_patterns(order: int, skips: bool) -> tuple[str, ...]:
    """Every pattern reachable from the full pattern, longest first."""
    if order < 1:
        raise ValueError("order must be >= 1")
    top = "1" * order
    seen = {top}
    frontier = [top]
    while frontier:
        nxt = []
        for p in frontier:
            for c in child_patterns(p, skips):
                if c not in seen:
                    seen.add(c)
                    nxt.append(c)
        frontier = nxt
    return tuple(sorted(seen, key=lambda p: (-len(p), p[::-1])))


@lru_cache(maxsize=None)
def child_patterns(pattern: str, skips: bool) -> tuple[str, ...]:
    """Lower-order patterns interpolated into ``pattern`` (uniform weights)."""
    if len(pattern) == 1:
        return ()
    positions = range(len(pattern) - 1) if skips else (0,)
    children = []
    for j in positions:
        if pattern[j] != "1":
            continue
        child = normalize_pattern(pattern[:j] + "0" + pattern[j + 1:])
        if child not in children:
            children.append(child)
    return tuple(children)


def project(history: Sequence[str], pattern: str) -> tuple[str, ...]:
    """Key of ``history`` (the ``order-1`` words before the target) under ``pattern``."""
    width = len(pattern) - 1
    if width == 0:
        return ()
    tail = history[len(history) - width:]
    return tuple(w if b == "1" else SKIP for w, b in zip(tail, pattern[:-1]))


def modified_kn_discounts(count_of_counts: Sequence[int]) -> tuple[float, float, float]:
    """Chen-Goodman discounts D1, D2, D3+ from n1..n4, clamped to [0, k]."""
    n1, n2, n3, n4 = count_of_counts
    if min(n1, n2, n3, n4) == 0:
        return (FALLBACK_DISCOUNT,) * 3
    y = n1 / (n1 + 2 * n2)
    d1 = 1 - 2 * y * n2 / n1
    d2 = 2 - 3 * y * n3 / n2
    d3 = 3 - 4 * y * n4 / n3
    return (min(max(d1, 0.0), 1.0), min(max(d2, 0.0), 2.0), min(max(d3, 0.0), 3.0))


@dataclass
class _Level:
    """Counts of one pattern: ``table[history_key][word] = count``."""

    table: dict[tuple[str, ...], dict[str, int]] = field(default_factory=dict)
    discounts: tuple[float, float, float] = (FALLBACK_DISCOUNT,) * 3
    # history_key -> (total, N1, N2, N3+)
    summary: dict[tuple[str, ...], tuple[int, int, int, int]] = field(default_factory=dict)

    def finalize(self) -> None:
        coc = [0, 0, 0, 0]
        self.summary = {}
        for key, row in self.table.items():
            n = [0, 0, 0]
            for c in row.values():
                if c <= 4:
                    coc[c - 1] += 1
                n[min(c, 3) - 1] += 1
            self.summary[key] = (sum(row.values()), n[0], n[1], n[2])
        self.discounts = modified_kn_discounts(coc)

    def discount(self, count: int) -> float:
        if count == 0:
            return 0.0
        return self.discounts[min(count, 3) - 1]


@dataclass
class LMModel:
    order: int
    skips: bool
    vocabulary: tuple[str, ...]
    levels: dict[str, _Level]

    def __post_init__(self):
        self._vocab_set = frozenset(self.vocabulary)

    @property
    def top_pattern(self) -> str:
        return "1" * self.order

    def map_token(self, token: str) -> str:
        return token if token in self._vocab_set else UNK

    def to_counts(self) -> str:
        """Sorted ``pattern \\t ngram \\t count`` lines plus order/skip/vocabulary headers."""
        lines = [f"#order\t{self.order}", f"#skips\t{int(self.skips)}"]
        lines += [f"#vocab\t{w}" for w in self.vocabulary]
        rows = []
        for pattern, level in self.levels.items():
            for key, row in level.table.items():
                for word, count in row.items():
                    rows.append((pattern, " ".join(key + (word,)), count))
        rows.sort()
        lines += [f"{p}\t{g}\t{c}" for p, g, c in rows]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_counts(cls, text: str) -> LMModel:
        order, skips, vocab = 0, True, []
        levels: dict[str, _Level] = {}
        for line in text.splitlines():
            if not line:
                continue
            parts = line.split("\t")
            if parts[0] == "#order":
                order = int(parts[1])
            elif parts[0] == "#skips":
                skips = bool(int(parts[1]))
            elif parts[0] == "#vocab":
                vocab.append(parts[1])
            else:
                pattern, gram, count = parts
                words = gram.split(" ")
                level = levels.setdefault(pattern, _Level())
                level.table.setdefault(tuple(words[:-1]), {})[words[-1]] = int(count)
        for p in all_patterns(order, skips):
            levels.setdefault(p, _Level())
        for level in levels.values():
            level.finalize()
        return cls(order, skips, tuple(vocab), levels)


def train_lm(
    posts: Sequence[Sequence[str]],
    order: int = 4,
    vocabulary: Sequence[str] | None = None,
    skips: bool = True,
) -> LMModel:
    """Count every pattern of a skip n-gram model over one class's posts.

    ``vocabulary`` is the set of predictable words (normally the joint
    training vocabulary of both classes); ``<unk>`` is always added and
    tokens outside the vocabulary are counted as ``<unk>``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if vocabulary is None:
        vocabulary = {t for post in posts for t in post}
    vocab = tuple(sorted(set(vocabulary) - {UNK, BOS})) + (UNK,)
    vocab_set = frozenset(vocab)
    patterns = all_patterns(order, skips)
    top = "1" * order if order > 1 else None
    raw: dict[tuple[str, ...], dict[str, int]] = defaultdict(lambda: defaultdict(int))
    cont: dict[str, dict[tuple[str, ...], dict[str, set]]] = {
        p: defaultdict(lambda: defaultdict(set)) for p in patterns if p != top
    }
    for post in posts:
        padded = [BOS] * order + [t if t in vocab_set else UNK for t in post]
        for i in range(order, len(padded)):
            word = padded[i]
            history = padded[i - order + 1:i]
            if top is not None:
                raw[project(history, top)][word] += 1
            for p, table in cont.items():
                table[project(history, p)][word].add(padded[i - len(p)])
    levels = {top: _Level({k: dict(v) for k, v in raw.items()})} if top is not None else {}
    for p, table in cont.items():
        levels[p] = _Level({k: {w: len(s) for w, s in row.items()} for k, row in table.items()})
    for level in levels.values():
        level.finalize()
    return LMModel(order, skips, vocab, levels)


def _level_probability(model: LMModel, word: str, history: tuple[str, ...], pattern: str, memo: dict) -> float:
    key = (pattern, word)
    if key in memo:
        return memo[key]
    children = child_patterns(pattern, model.skips)
    if children:
        lower = sum(_level_probability(model, word, history, c, memo) for c in children) / len(children)
    else:
        lower = 1.0 / len(model.vocabulary)
    level = model.levels[pattern]
    hkey = project(history, pattern)
    summary = level.summary.get(hkey)
    if summary is None or summary[0] == 0:
        p = lower
    else:
        total, n1, n2, n3 = summary
        count = level.table[hkey].get(word, 0)
        d1, d2, d3 = level.discounts
        gamma = (d1 * n1 + d2 * n2 + d3 * n3) / total
        p = max(count - level.discount(count), 0.0) / total + gamma * lower
    memo[key] = p
    return p


def kn_probability(model: LMModel, word: str, history: Sequence[str] = (), pattern: str | None = None) -> float:
    """Smoothed P(word | history).

    ``history`` holds the preceding words (missing positions are padded with
    ``<s>``, unknown words become ``<unk>``). ``pattern`` selects a level of
    the model; the default is the full pattern, and ``"1"`` is the unigram
    level.
    """
    width = model.order - 1
    hist = [model.map_token(w) if w != BOS else BOS for w in list(history)[-width:]] if width else []
    hist = [BOS] * (width - len(hist)) + hist
    pattern = model.top_pattern if pattern is None else normalize_pattern(pattern)
    if pattern not in model.levels:
        raise ValueError(f"pattern {pattern!r} is not part of this model")
    return _level_probability(model, model.map_token(word), tuple(hist), pattern, {})


def log_probabilities(model: LMModel, post: Sequence[str]) -> list[float]:
    width = model.order - 1
    padded = [BOS] * width + [model.map_token(t) for t in post]
    out = []
    for i in range(width, len(padded)):
        hist = tuple(padded[i - width:i])
        out.append(math.log(_level_probability(model, padded[i], hist, model.top_pattern, {})))
    return out


def perplexity(model: LMModel, post: Sequence[str]) -> float:
    """Average negative log-probability H of a post (perplexity is ``exp(H)``)."""
    if len(post) == 0:
        raise ValueError("perplexity is undefined for an empty post")
    return -sum(log_probabilities(model, post)) / len(post)


def predict_lm(model_pos: LMModel, model_neg: LMModel, post: Sequence[str]) -> int:
    """1 (disruptive) when the disruptive model has strictly lower perplexity."""
    return int(perplexity(model_pos, post) < perplexity(model_neg, post))


class LanguageModelClassifier(ClassifierMixin, BaseEstimator):
    """Two class-conditional skip n-gram models compared by perplexity.

    ``decision_function`` is ``H(constructive) - H(disruptive)``; posts
    with no tokens have undefined perplexity and score 0 (class 0).
    """

    def __init__(self, order=4, skips=True):
        self.order = order
        self.skips = skips

    def fit(self, X, y):
        X = check_documents(X)
        y = check_binary_labels(y, len(X))
        check_both_classes(y)
        vocab = {t for doc in X for t in doc}
        self.model_neg_ = train_lm([d for d, k in zip(X, y) if k == 0], self.order, vocab, self.skips)
        self.model_pos_ = train_lm([d for d, k in zip(X, y) if k == 1], self.order, vocab, self.skips)
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "model_pos_")
        out = []
        for doc in check_documents(X):
            if not doc:
                out.append(0.0)
            else:
                out.append(perplexity(self.model_neg_, doc) - perplexity(self.model_pos_, doc))
        return np.array(out)

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)
