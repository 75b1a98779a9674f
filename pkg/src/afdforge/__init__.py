"""Build an annotated corpus of constructive/disruptive AfD discussion posts
from MediaWiki dumps and block logs, and train word-level classifiers on it."""

__version__ = "0.1.0"
