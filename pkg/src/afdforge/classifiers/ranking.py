"""Term rankings: SVM weights and naive Bayes class-probability ratios."""

from __future__ import annotations

import numpy as np

from .naive_bayes import NBModel
from .svm import SVMModel

_CLASS_NAMES = {"disruptive": 1, "constructive": 0, "+": 1, "-": 0, 1: 1, 0: 0}


def _model_of(obj):
    model = getattr(obj, "model_", obj)
    if not isinstance(model, (NBModel, SVMModel)):
        raise TypeError(f"cannot rank terms of {type(obj).__name__}")
    if model.vocabulary is None:
        raise ValueError("model has no vocabulary to name its terms")
    return model


def ranked_term_weights(model) -> list[tuple[str, float]]:
    """All terms with their weight, most disruptive-indicative first.

    SVM: the signed hyperplane weight. NB: log(P(w|disruptive) / P(w|constructive)).
    Equal weights are ordered by term.
    """
    model = _model_of(model)
    if isinstance(model, SVMModel):
        weights = np.asarray(model.weights, dtype=float)
    else:
        weights = model.log_prob[1] - model.log_prob[0]
    pairs = [(t, float(w)) for t, w in zip(model.vocabulary.terms, weights)]
    pairs.sort(key=lambda p: (-p[1], p[0]))
    return pairs


def top_weighted_terms(model, k: int, cls=1) -> list[str]:
    """The ``k`` terms most indicative of ``cls`` (1/"disruptive" or 0/"constructive")."""
    if k < 0:
        raise ValueError("k must be non-negative")
    try:
        target = _CLASS_NAMES[cls]
    except (KeyError, TypeError):
        raise ValueError(f"unknown class {cls!r}") from None
    pairs = ranked_term_weights(model)
    if target == 0:
        pairs.sort(key=lambda p: (p[1], p[0]))
    return [t for t, _ in pairs[:k]]
