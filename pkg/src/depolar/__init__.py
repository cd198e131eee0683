"""Detect polar language in news text and rewrite it toward neutral wording.

The pipeline: ingest a labeled corpus, train ideology/topic-aware word
embeddings, score per-topic word polarity, retrieve neutral replacement
candidates, and search over replacements with a simulated annealer. A CLI
(`depolar`) and an HTTP service expose the same operations.
"""

__version__ = "0.1.0"

from depolar.errors import (
    CorpusError,
    DegenerateTopicError,
    DepolarError,
    EvalError,
    OutOfVocabularyError,
    UnknownOptionError,
)

__all__ = [
    "CorpusError",
    "DegenerateTopicError",
    "DepolarError",
    "EvalError",
    "OutOfVocabularyError",
    "UnknownOptionError",
    "__version__",
]
