"""Soft-margin linear SVM trained by sequential minimal optimization.

Solves the dual of::

    min_{w,b}  1/2 |w|^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))

with the second-order working-set selection and two-variable update used by
LIBSVM. The bias is not regularized. Training is fully deterministic.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ..features import SparseVector, Vocabulary, build_vocabulary, tfidf_matrix
from ..validation import check_binary_labels, check_both_classes, check_documents

logger = logging.getLogger(__name__)

TAU = 1e-12
_CACHE_BYTES = 64 * 1024 * 1024


@dataclass
class SVMModel:
    weights: np.ndarray
    bias: float
    C: float
    vocabulary: Vocabulary | None = None
    objective_history: list[float] = field(default_factory=list)
    duality_gap: float = float("nan")
    n_iter: int = 0

    def decision(self, X) -> np.ndarray:
        if sp.issparse(X):
            return np.asarray(X @ self.weights).ravel() + self.bias
        return np.asarray(X, dtype=float) @ self.weights + self.bias

    def to_tsv(self) -> str:
        lines = [f"#bias\t{float(self.bias)!r}", f"#C\t{float(self.C)!r}"]
        terms = self.vocabulary.terms if self.vocabulary is not None else [str(i) for i in range(len(self.weights))]
        lines += [f"{t}\t{float(w)!r}" for t, w in zip(terms, self.weights)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str, vocabulary: Vocabulary | None = None) -> SVMModel:
        bias, C, rows = 0.0, 1.0, []
        for line in text.split("\n"):
            if not line:
                continue
            key, value = line.split("\t")
            if key == "#bias":
                bias = float(value)
            elif key == "#C":
                C = float(value)
            else:
                rows.append((key, float(value)))
        weights = np.zeros(len(vocabulary) if vocabulary is not None else len(rows))
        for pos, (term, w) in enumerate(rows):
            weights[vocabulary.index[term] if vocabulary is not None else pos] = w
        return cls(weights, bias, C, vocabulary)


class _KernelColumns:
    """Linear-kernel columns K[:, i] = X x_i, computed on demand with an LRU cache."""

    def __init__(self, X):
        self.X = X
        self.n = X.shape[0]
        self.capacity = max(2, _CACHE_BYTES // (8 * max(self.n, 1)))
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()
        if sp.issparse(X):
            self.diag = np.asarray(X.multiply(X).sum(axis=1)).ravel()
        else:
            self.diag = np.einsum("ij,ij->i", X, X)

    def column(self, i: int) -> np.ndarray:
        col = self.cache.get(i)
        if col is not None:
            self.cache.move_to_end(i)
            return col
        if sp.issparse(self.X):
            col = np.asarray(self.X @ self.X[i].T.toarray()).ravel()
        else:
            col = self.X @ self.X[i]
        self.cache[i] = col
        if len(self.cache) > self.capacity:
            self.cache.popitem(last=False)
        return col


def _check_features(X):
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=float)
        data = X.data
    else:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError("expected a 2-d feature matrix")
        data = X
    if not np.all(np.isfinite(data)):
        raise ValueError("feature matrix contains non-finite values")
    return X


def _select_working_set(y, alpha, G, C, kc: _KernelColumns, eps):
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    minus_yG = -y * G
    if not up.any() or not low.any():
        return None
    cand = np.where(up, minus_yG, -np.inf)
    i = int(np.argmax(cand))
    gmax = cand[i]
    gmax2 = float(np.max(np.where(low, -minus_yG, -np.inf)))
    if gmax + gmax2 < eps:
        return None
    Ki = kc.column(i)
    grad_diff = gmax + y * G
    quad = kc.diag[i] + kc.diag - 2.0 * Ki
    quad = np.where(quad > 0, quad, TAU)
    ok = low & (grad_diff > 0)
    if not ok.any():
        return None
    obj = np.where(ok, -(grad_diff**2) / quad, np.inf)
    j = int(np.argmin(obj))
    return i, j, gmax + gmax2


def _update_pair(i, j, y, alpha, G, C, kc: _KernelColumns):
    Ki, Kj = kc.column(i), kc.column(j)
    Qii, Qjj, Kij = kc.diag[i], kc.diag[j], Ki[j]
    # Both cases share the curvature K_ii + K_jj - 2 K_ij along the feasible line.
    quad = max(Qii + Qjj - 2 * Kij, TAU)
    old_i, old_j = alpha[i], alpha[j]
    if y[i] != y[j]:
        delta = (-G[i] - G[j]) / quad
        diff = alpha[i] - alpha[j]
        alpha[i] += delta
        alpha[j] += delta
        if diff > 0:
            if alpha[j] < 0:
                alpha[j] = 0
                alpha[i] = diff
        elif alpha[i] < 0:
            alpha[i] = 0
            alpha[j] = -diff
        if diff > 0:
            if alpha[i] > C:
                alpha[i] = C
                alpha[j] = C - diff
        elif alpha[j] > C:
            alpha[j] = C
            alpha[i] = C + diff
    else:
        delta = (G[i] - G[j]) / quad
        total = alpha[i] + alpha[j]
        alpha[i] -= delta
        alpha[j] += delta
        if total > C:
            if alpha[i] > C:
                alpha[i] = C
                alpha[j] = total - C
        elif alpha[j] < 0:
            alpha[j] = 0
            alpha[i] = total
        if total > C:
            if alpha[j] > C:
                alpha[j] = C
                alpha[i] = total - C
        elif alpha[i] < 0:
            alpha[i] = 0
            alpha[j] = total
    d_i, d_j = alpha[i] - old_i, alpha[j] - old_j
    # Q[:, t] = y * y_t * K[:, t]
    G += y * (y[i] * d_i * Ki + y[j] * d_j * Kj)


def _rho(y, alpha, G, C) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(np.mean(yG[free]))
    at_ub = alpha >= C
    at_lb = alpha <= 0
    ub_mask = (at_ub & (y < 0)) | (at_lb & (y > 0))
    lb_mask = (at_ub & (y > 0)) | (at_lb & (y < 0))
    ub = float(np.min(yG[ub_mask])) if ub_mask.any() else np.inf
    lb = float(np.max(yG[lb_mask])) if lb_mask.any() else -np.inf
    if np.isinf(ub) or np.isinf(lb):
        return float(ub if np.isfinite(ub) else lb if np.isfinite(lb) else 0.0)
    return (ub + lb) / 2


def primal_objective(w: np.ndarray, b: float, X, y_pm: np.ndarray, C: float) -> float:
    margins = y_pm * (np.asarray(X @ w).ravel() + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def train_svm(
    X,
    y,
    C: float = 1.0,
    vocabulary: Vocabulary | None = None,
    tol: float = 1e-3,
    max_iter: int | None = None,
    record_objective: bool = False,
) -> SVMModel:
    """Fit a linear soft-margin SVM to rows of ``X`` with labels 0/1 (1 = disruptive).

    Stops when the maximal KKT violation drops below ``tol``. The final
    primal-dual gap is stored on the model; with ``record_objective`` the
    dual objective after every step is kept as well (it never increases).
    """
    if not C > 0:
        raise ValueError("C must be positive")
    X = _check_features(X)
    y01 = check_binary_labels(y, X.shape[0])
    check_both_classes(y01)
    yv = np.where(y01 == 1, 1.0, -1.0)
    n = X.shape[0]
    kc = _KernelColumns(X)
    alpha = np.zeros(n)
    G = -np.ones(n)
    limit = max_iter if max_iter is not None else max(10_000_000, 100 * n)
    history: list[float] = []
    it = 0
    while it < limit:
        ws = _select_working_set(yv, alpha, G, C, kc, tol)
        if ws is None:
            break
        _update_pair(ws[0], ws[1], yv, alpha, G, C, kc)
        it += 1
        if record_objective:
            history.append(0.5 * float(alpha @ (G - 1.0)))
    else:
        logger.warning("SVM stopped after %d iterations without reaching tol=%g", it, tol)
    rho = _rho(yv, alpha, G, C)
    coef = alpha * yv
    w = np.asarray(X.T @ coef).ravel()
    dual = -0.5 * float(alpha @ (G - 1.0))
    gap = primal_objective(w, -rho, X, yv, C) - dual
    return SVMModel(w, -rho, float(C), vocabulary, history, gap, it)


def predict_svm(model: SVMModel, vector) -> tuple[int, float]:
    """Class (1 iff the margin score is strictly positive) and the score w.x + b."""
    if isinstance(vector, SparseVector):
        score = sum(w * model.weights[i] for i, w in zip(vector.indices, vector.weights)) + model.bias
    else:
        x = np.asarray(vector, dtype=float).ravel()
        if not np.all(np.isfinite(x)):
            raise ValueError("feature vector contains non-finite values")
        score = float(x @ model.weights) + model.bias
    return int(score > 0), float(score)


class LinearSVM(ClassifierMixin, BaseEstimator):
    """Linear SVM over tf-idf vectors of token lists."""

    def __init__(self, C=1.0, tol=1e-3, max_iter=None):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X = check_documents(X)
        y = check_binary_labels(y, len(X))
        vocab = build_vocabulary(X, y)
        self.model_ = train_svm(tfidf_matrix(X, vocab), y, self.C, vocab, self.tol, self.max_iter)
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        return self.model_.decision(tfidf_matrix(check_documents(X), self.model_.vocabulary))

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(np.int64)
