"""The three word-level classifiers and their term rankings."""

from .language_model import LanguageModelClassifier, LMModel, kn_probability, perplexity, predict_lm, train_lm
from .naive_bayes import NBModel, TfidfNaiveBayes, predict_nb, train_nb
from .persistence import load_model, save_model
from .ranking import ranked_term_weights, top_weighted_terms
from .svm import LinearSVM, SVMModel, predict_svm, train_svm

__all__ = [
    "LMModel",
    "LanguageModelClassifier",
    "LinearSVM",
    "NBModel",
    "SVMModel",
    "TfidfNaiveBayes",
    "kn_probability",
    "load_model",
    "perplexity",
    "predict_lm",
    "predict_nb",
    "predict_svm",
    "ranked_term_weights",
    "save_model",
    "top_weighted_terms",
    "train_lm",
    "train_nb",
    "train_svm",
]
