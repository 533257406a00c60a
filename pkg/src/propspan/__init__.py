"""Propaganda span identification and technique classification toolkit."""

from .corpus import Article, Corpus, LabeledSpan, Technique

__version__ = "0.1.0"

__all__ = ["Article", "Corpus", "LabeledSpan", "Technique", "__version__"]
