"""Multinomial naive Bayes with tf-idf exponents and Lidstone/Laplace smoothing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ..features import SparseVector, Vocabulary, build_vocabulary, count_matrix, tfidf_matrix
from ..validation import check_binary_labels, check_both_classes, check_documents

# Relative score gap below which the two classes count as tied (tie -> class 0).
TIE_TOLERANCE = 1e-12


@dataclass
class NBModel:
    vocabulary: Vocabulary
    log_prior: np.ndarray  # (2,)
    log_prob: np.ndarray  # (2, |V|), log P(w | C_k)
    delta: float

    def probabilities(self, k: int) -> np.ndarray:
        return np.exp(self.log_prob[k])

    def to_tsv(self) -> str:
        lines = [
            f"#delta\t{float(self.delta)!r}",
            f"#prior\t{float(self.log_prior[0])!r}\t{float(self.log_prior[1])!r}",
        ]
        for i, term in enumerate(self.vocabulary.terms):
            lines.append(f"{term}\t{float(self.log_prob[0, i])!r}\t{float(self.log_prob[1, i])!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str, vocabulary: Vocabulary) -> NBModel:
        delta = 1.0
        prior = np.zeros(2)
        probs = np.zeros((2, len(vocabulary)))
        for line in text.split("\n"):
            parts = line.split("\t")
            if parts[0] == "#delta":
                delta = float(parts[1])
            elif parts[0] == "#prior":
                prior = np.array([float(parts[1]), float(parts[2])])
            elif line:
                i = vocabulary.index[parts[0]]
                probs[0, i], probs[1, i] = float(parts[1]), float(parts[2])
        return cls(vocabulary, prior, probs, delta)


def train_nb(counts, y, vocabulary: Vocabulary, delta: float = 1.0) -> NBModel:
    """Estimate priors and smoothed term distributions from raw term counts.

    P(w|C_k) = (tf(w, C_k) + delta) / sum_v (tf(v, C_k) + delta) over the
    training vocabulary; delta=1 is Laplace smoothing.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    y = check_binary_labels(y, counts.shape[0])
    check_both_classes(y)
    counts = sp.csr_matrix(counts, dtype=float)
    log_prob = np.empty((2, counts.shape[1]))
    for k in (0, 1):
        tf = np.asarray(counts[y == k].sum(axis=0)).ravel() + delta
        if tf.size:
            log_prob[k] = np.log(tf) - np.log(tf.sum())
    log_prior = np.log(np.array([np.mean(y == 0), np.mean(y == 1)]))
    return NBModel(vocabulary, log_prior, log_prob, float(delta))


def nb_scores(model: NBModel, X) -> np.ndarray:
    """Per-class log scores log P(C_k) + sum_w tfidf(w) * log P(w|C_k), shape (n, 2)."""
    X = sp.csr_matrix(X, dtype=float)
    return np.asarray(X @ model.log_prob.T) + model.log_prior


def _argmax(scores: np.ndarray) -> np.ndarray:
    gap = scores[:, 1] - scores[:, 0]
    scale = np.maximum(1.0, np.maximum(np.abs(scores[:, 0]), np.abs(scores[:, 1])))
    return (gap > TIE_TOLERANCE * scale).astype(np.int64)


def predict_nb(model: NBModel, vector: SparseVector) -> tuple[int, tuple[float, float]]:
    s = model.log_prior.copy()
    for i, w in zip(vector.indices, vector.weights):
        s += w * model.log_prob[:, i]
    cls = int(_argmax(s[None, :])[0])
    return cls, (float(s[0]), float(s[1]))


class TfidfNaiveBayes(ClassifierMixin, BaseEstimator):
    """Multinomial NB trained on term counts and applied with tf-idf exponents.

    ``X`` is a sequence of (stemmed) token lists; labels are 1 for disruptive,
    0 for constructive.
    """

    def __init__(self, delta=1.0):
        self.delta = delta

    def fit(self, X, y):
        X = check_documents(X)
        y = check_binary_labels(y, len(X))
        vocab = build_vocabulary(X, y)
        self.model_ = train_nb(count_matrix(X, vocab), y, vocab, self.delta)
        self.classes_ = np.array([0, 1])
        return self

    def _scores(self, X):
        check_is_fitted(self, "model_")
        return nb_scores(self.model_, tfidf_matrix(check_documents(X), self.model_.vocabulary))

    def predict_log_scores(self, X) -> np.ndarray:
        return self._scores(X)

    def decision_function(self, X) -> np.ndarray:
        s = self._scores(X)
        return s[:, 1] - s[:, 0]

    def predict(self, X) -> np.ndarray:
        return _argmax(self._scores(X))
