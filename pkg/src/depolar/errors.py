"""Exception types shared across the package."""


class DepolarError(Exception):
    """Base class for all package errors."""


class CorpusError(DepolarError):
    """Malformed corpus input (bad schema, empty corpus, bad labels)."""


class OutOfVocabularyError(DepolarError):
    """A queried word is not in the trained vocabulary."""


class UnknownOptionError(DepolarError):
    """An ideology or topic is not one of the configured options."""


class DegenerateTopicError(DepolarError):
    """A topic has too few (or constant-score) words to normalize."""


class EvalError(DepolarError):
    """Evaluation inputs are unusable (e.g. no polar documents)."""
