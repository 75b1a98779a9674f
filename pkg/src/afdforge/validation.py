"""Input checks for the estimators, which take documents as lists of tokens."""

from __future__ import annotations

import numpy as np


def check_documents(X) -> list[list[str]]:
    """Validate a sequence of token lists and return it as a list of lists."""
    if isinstance(X, (str, bytes)):
        raise TypeError("expected a sequence of token lists, got a single string")
    docs = []
    for i, doc in enumerate(X):
        if isinstance(doc, str):
            raise TypeError(f"document {i} is a string; pass token lists (e.g. text.split())")
        docs.append(list(doc))
    return docs


def check_binary_labels(y, n_samples: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != n_samples:
        raise ValueError(f"expected {n_samples} labels, got shape {y.shape}")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0 (constructive) or 1 (disruptive)")
    return y.astype(np.int64)


def check_both_classes(y: np.ndarray) -> None:
    missing = [k for k in (0, 1) if not np.any(y == k)]
    if missing:
        raise ValueError(f"training data has no samples of class {missing}")
