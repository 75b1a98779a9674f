"""Stemming, vocabularies, tf-idf vectors and function-word restriction."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
import scipy.sparse as sp
import snowballstemmer
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .textclean import CANONICAL_LINK_RE
from .validation import check_documents

_STEMMER = snowballstemmer.stemmer("english")


@lru_cache(maxsize=200_000)
def stem(word: str) -> str:
    """English snowball (Porter2) stem; canonical link tokens such as ``WPNPA`` pass through.

    A single Porter2 pass is not idempotent (``decision`` -> ``decis`` ->
    ``deci``), so the stemmer is reapplied until the word stops changing.
    Stems never grow, which bounds the loop.
    """
    if CANONICAL_LINK_RE.match(word):
        return word
    current = word
    while True:
        nxt = _STEMMER.stemWord(current)
        if nxt == current:
            return current
        current = nxt


def stem_tokens(tokens: Iterable[str]) -> list[str]:
    return [stem(t) for t in tokens]


@dataclass
class Vocabulary:
    """Term index with document frequencies and per-class term frequencies.

    Indices follow sorted term order, so equal corpora give equal vocabularies.
    """

    terms: list[str] = field(default_factory=list)
    df: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    tf_pos: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    tf_neg: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    n_documents: int = 0

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def idf(self) -> np.ndarray:
        if self.n_documents == 0:
            raise ValueError("idf undefined for an empty corpus (N=0)")
        with np.errstate(divide="ignore"):
            return np.where(self.df > 0, np.log(self.n_documents / np.maximum(self.df, 1)), 0.0)

    def to_tsv(self) -> str:
        lines = [f"# documents\t{self.n_documents}"]
        for i, t in enumerate(self.terms):
            lines.append(f"{t}\t{i}\t{self.df[i]}\t{self.tf_pos[i]}\t{self.tf_neg[i]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> Vocabulary:
        n_docs = 0
        rows = []
        for line in text.splitlines():
            if line.startswith("# documents\t"):
                n_docs = int(line.split("\t")[1])
            elif line and not line.startswith("#"):
                term, idx, df, tp, tn = line.split("\t")
                rows.append((int(idx), term, int(df), int(tp), int(tn)))
        rows.sort()
        if [r[0] for r in rows] != list(range(len(rows))):
            raise ValueError("vocabulary indices are not dense 0..|V|-1")
        return cls(
            [r[1] for r in rows],
            np.array([r[2] for r in rows], dtype=np.int64),
            np.array([r[3] for r in rows], dtype=np.int64),
            np.array([r[4] for r in rows], dtype=np.int64),
            n_docs,
        )


def build_vocabulary(docs: Sequence[Sequence[str]], labels: Sequence[int] | None = None) -> Vocabulary:
    """Count document and per-class term frequencies. Nothing is pruned."""
    df: Counter = Counter()
    tf = [Counter(), Counter()]
    for k, doc in enumerate(docs):
        df.update(set(doc))
        if labels is not None:
            tf[1 if labels[k] == 1 else 0].update(doc)
    terms = sorted(df)
    return Vocabulary(
        terms,
        np.array([df[t] for t in terms], dtype=np.int64),
        np.array([tf[1][t] for t in terms], dtype=np.int64),
        np.array([tf[0][t] for t in terms], dtype=np.int64),
        len(docs),
    )


@dataclass(frozen=True)
class SparseVector:
    indices: tuple[int, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if any(w <= 0 for w in self.weights):
            raise ValueError("zero or negative weights are not stored")

    def __len__(self) -> int:
        return len(self.indices)

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[list(self.indices)] = self.weights
        return out


def term_counts(tokens: Iterable[str], vocab: Vocabulary) -> dict[int, int]:
    counts: dict[int, int] = {}
    for t in tokens:
        i = vocab.index.get(t)
        if i is not None:
            counts[i] = counts.get(i, 0) + 1
    return counts


def tfidf_vector(tokens: Sequence[str], vocab: Vocabulary) -> SparseVector:
    """weight(t) = tf(t, post) * ln(N / df(t)); out-of-vocabulary terms are dropped."""
    if vocab.n_documents == 0:
        raise ValueError("tf-idf undefined for an empty training corpus (N=0)")
    pairs = []
    for i, c in sorted(term_counts(tokens, vocab).items()):
        w = c * math.log(vocab.n_documents / vocab.df[i])
        if w > 0:
            pairs.append((i, w))
    return SparseVector(tuple(i for i, _ in pairs), tuple(w for _, w in pairs))


def count_matrix(docs: Sequence[Sequence[str]], vocab: Vocabulary) -> sp.csr_matrix:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for doc in docs:
        for i, c in sorted(term_counts(doc, vocab).items()):
            indices.append(i)
            data.append(c)
        indptr.append(len(indices))
    return sp.csr_matrix((np.array(data, dtype=float), np.array(indices, dtype=np.int64), indptr), shape=(len(docs), len(vocab)))


def tfidf_matrix(docs: Sequence[Sequence[str]], vocab: Vocabulary) -> sp.csr_matrix:
    """Row-stacked :func:`tfidf_vector` outputs as a CSR matrix."""
    counts = count_matrix(docs, vocab)
    weighted = counts @ sp.diags(vocab.idf())
    weighted = sp.csr_matrix(weighted)
    weighted.eliminate_zeros()
    return weighted


# --- function words ----------------------------------------------------------


def load_function_words(path: str | None = None) -> frozenset[str]:
    if path is None:
        text = resources.files("afdforge").joinpath("data/function_words.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    words = frozenset(
        line.strip().lower() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")
    )
    if not words:
        raise ValueError("function word list is empty")
    return words


def filter_function_words(tokens: Sequence[str], words: Iterable[str]) -> list[str]:
    """Keep only tokens whose lowercase surface form is a function word, in order."""
    words = words if isinstance(words, (set, frozenset)) else frozenset(words)
    if not words:
        raise ValueError("function word list is empty")
    return [t for t in tokens if t.lower() in words]


# --- estimators --------------------------------------------------------------


class FunctionWordFilter(TransformerMixin, BaseEstimator):
    """Restrict token lists to function words (applied before stemming)."""

    def __init__(self, words_path=None):
        self.words_path = words_path

    def fit(self, X, y=None):
        self.words_ = load_function_words(self.words_path)
        return self

    def transform(self, X):
        check_is_fitted(self, "words_")
        return [filter_function_words(doc, self.words_) for doc in check_documents(X)]


class Stemmer(TransformerMixin, BaseEstimator):
    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [stem_tokens(doc) for doc in check_documents(X)]


class TfidfVectorizer(TransformerMixin, BaseEstimator):
    """Token lists to tf-idf CSR rows over the vocabulary seen in ``fit``."""

    def fit(self, X, y=None):
        X = check_documents(X)
        self.vocabulary_ = build_vocabulary(X, y)
        return self

    def transform(self, X):
        check_is_fitted(self, "vocabulary_")
        return tfidf_matrix(check_documents(X), self.vocabulary_)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "vocabulary_")
        return np.array(self.vocabulary_.terms, dtype=object)
