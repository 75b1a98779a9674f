"""Saving and loading fitted classifiers as a directory of text files.

Layout: ``meta.json`` plus ``vocabulary.tsv`` and ``nb.tsv``/``svm.tsv``, or
``lm_pos.counts`` and ``lm_neg.counts`` for the language model pair.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import __version__
from ..features import Vocabulary
from .language_model import LanguageModelClassifier, LMModel
from .naive_bayes import NBModel, TfidfNaiveBayes
from .svm import LinearSVM, SVMModel

_KINDS = {TfidfNaiveBayes: "nb", LanguageModelClassifier: "lm", LinearSVM: "svm"}


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def save_model(estimator, directory, extra: dict | None = None) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    kind = _KINDS.get(type(estimator))
    if kind is None:
        raise TypeError(f"cannot save {type(estimator).__name__}")
    meta = {"classifier": kind, "params": estimator.get_params(), "version": __version__}
    meta.update(extra or {})
    if kind == "lm":
        _write(directory / "lm_pos.counts", estimator.model_pos_.to_counts())
        _write(directory / "lm_neg.counts", estimator.model_neg_.to_counts())
    else:
        model = estimator.model_
        _write(directory / "vocabulary.tsv", model.vocabulary.to_tsv())
        _write(directory / f"{kind}.tsv", model.to_tsv())
    _write(directory / "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return directory


def load_model(directory):
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text("utf-8"))
    kind = meta["classifier"]
    if kind == "lm":
        est = LanguageModelClassifier(**meta["params"])
        est.model_pos_ = LMModel.from_counts((directory / "lm_pos.counts").read_text("utf-8"))
        est.model_neg_ = LMModel.from_counts((directory / "lm_neg.counts").read_text("utf-8"))
    else:
        vocab = Vocabulary.from_tsv((directory / "vocabulary.tsv").read_text("utf-8"))
        text = (directory / f"{kind}.tsv").read_text("utf-8")
        if kind == "nb":
            est = TfidfNaiveBayes(**meta["params"])
            est.model_ = NBModel.from_tsv(text, vocab)
        elif kind == "svm":
            est = LinearSVM(**meta["params"])
            est.model_ = SVMModel.from_tsv(text, vocab)
        else:
            raise ValueError(f"unknown classifier kind {kind!r} in {directory}")
    est.classes_ = np.array([0, 1])
    return est, meta
