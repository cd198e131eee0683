"""Per-topic word polarity from the geometry of ideology-composed vectors.

A word's polarity is the summed pairwise Euclidean distance between its
three ideology-composed vectors within a topic. A word used identically
across ideologies has near-identical vectors (score near 0); a word whose
usage concentrates in one ideology carries its whole training displacement
in that ideology's shift row, so its score is large. Scores are
z-normalized within each topic and words above zero are polar.
"""

from __future__ import annotations

import numpy as np

from depolar.corpus import IDEOLOGIES
from depolar.embedding import AttributeModel
from depolar.errors import DegenerateTopicError, OutOfVocabularyError, UnknownOptionError

DESK_MIN_FREQ = 5
LARGE_CORPUS_MIN_FREQ = 500


def word_polarity_raw(model: AttributeModel, word: str, topic: str) -> float:
    """Sum of Euclidean distances between the word's three ideology vectors.

    Three unordered ideology pairs; identical vectors score 0 and the score
    grows without bound as usage diverges across ideologies.
    """
    vectors = [model.compose(word, ideology, topic).astype(np.float64) for ideology in IDEOLOGIES]
    total = 0.0
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            total += float(np.linalg.norm(vectors[i] - vectors[j]))
    return total


class TopicIndex:
    """Raw and z-normalized polarity scores for one topic."""

    def __init__(self, topic: str, word_ids: np.ndarray, raw: np.ndarray, min_freq: int):
        if len(word_ids) < 2:
            raise DegenerateTopicError(f"degenerate topic {topic!r}: fewer than 2 eligible words")
        self.topic = topic
        self.word_ids = word_ids
        self.raw = raw
        self.min_freq = min_freq
        self.mean = float(raw.mean())
        self.std = float(raw.std())
        if self.std == 0:
            raise DegenerateTopicError(f"degenerate topic {topic!r}: constant polarity scores")
        self.z = (raw - self.mean) / self.std
        self._row_of = {int(w): i for i, w in enumerate(word_ids)}

    def z_of(self, word_id: int) -> float | None:
        row = self._row_of.get(int(word_id))
        return float(self.z[row]) if row is not None else None

    def raw_of(self, word_id: int) -> float | None:
        row = self._row_of.get(int(word_id))
        return float(self.raw[row]) if row is not None else None


class PolarityIndex:
    """Topic-keyed polarity scores over all frequent-enough vocabulary words."""

    def __init__(self, model: AttributeModel, min_freq: int = DESK_MIN_FREQ, topics: list[str] | None = None):
        self.model = model
        self.min_freq = min_freq
        self.topics: dict[str, TopicIndex] = {}
        for topic in topics if topics is not None else model.vocab.options("topic"):
            self.topics[topic] = build_topic_index(model, topic, min_freq)

    def topic(self, topic: str) -> TopicIndex:
        if topic not in self.topics:
            raise UnknownOptionError(f"unknown topic {topic!r}")
        return self.topics[topic]

    def z_score(self, word: str, topic: str) -> float | None:
        """Z-scored polarity, or None when the word is not indexed."""
        if word not in self.model.vocab:
            raise OutOfVocabularyError(f"out of vocabulary: {word!r}")
        return self.topic(topic).z_of(self.model.vocab.id(word))

    def detect_polar_words(self, tokens: list[str], topic: str) -> list[tuple[int, str, float]]:
        """(position, word, z) for every token whose z-score is above zero.

        Out-of-index tokens (including UNK and out-of-vocabulary words) are
        never flagged.
        """
        index = self.topic(topic)
        vocab_index = self.model.vocab.index
        out = []
        for pos, tok in enumerate(tokens):
            wid = vocab_index.get(tok)
            if wid is None:
                continue
            z = index.z_of(wid)
            if z is not None and z > 0:
                out.append((pos, tok, z))
        return out

    def paragraph_polarity(self, tokens: list[str], topic: str) -> float:
        """Occurrence-weighted sum of positive z-scores; 0 when nothing is polar."""
        return float(sum(z for _, _, z in self.detect_polar_words(tokens, topic)))


def build_topic_index(model: AttributeModel, topic: str, min_freq: int) -> TopicIndex:
    """Score every word with count >= min_freq under one topic.

    UNK is excluded regardless of its folded count.
    """
    if topic not in model.vocab.options("topic"):
        raise UnknownOptionError(f"unknown topic {topic!r}")
    vocab = model.vocab
    eligible = np.flatnonzero(vocab.counts >= min_freq)
    eligible = eligible[eligible != vocab.unk_id]
    if len(eligible) < 2:
        raise DegenerateTopicError(f"degenerate topic {topic!r}: fewer than 2 eligible words")

    composed = {
        ideology: model.compose_matrix(ideology, topic)[eligible].astype(np.float64)
        for ideology in IDEOLOGIES
    }
    raw = np.zeros(len(eligible), dtype=np.float64)
    pairs = [(a, b) for i, a in enumerate(IDEOLOGIES) for b in IDEOLOGIES[i + 1 :]]
    for a, b in pairs:
        raw += np.linalg.norm(composed[a] - composed[b], axis=1)
    return TopicIndex(topic, eligible, raw, min_freq)
