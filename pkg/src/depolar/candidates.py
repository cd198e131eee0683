"""Neutral replacement candidates for polar words, filtered by part of speech.

A candidate list for word w under a source ideology ranks every vocabulary
word v by the cosine distance between w's source-ideology vector and v's
neutral-ideology vector within the same topic, keeping only words whose
coarse POS matches w's.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from depolar.embedding import AttributeModel, cosine_distances
from depolar.errors import UnknownOptionError

DEFAULT_CAPACITY = 20

NOUN, VERB, ADJ, ADV, OTHER = "NOUN", "VERB", "ADJ", "ADV", "OTHER"

# Closed-class words; everything here tags OTHER.
_FUNCTION_WORDS = frozenset(
    """a an the and or but nor so yet of in on at by for with from to into onto over under
    about against between among through during before after above below up down out off
    again further then once here there when where why how all any both each few more most
    other some such no not only own same than too very can will just should now is are was
    were be been being have has had do does did he she it they them his her its their this
    that these those i you we me him us my your our if as while because until although
    who whom whose which what""".split()
)

# Suffix heuristics checked in order; first match wins.
_SUFFIX_RULES = (
    ("ly", ADV),
    ("ing", VERB),
    ("ed", VERB),
    ("ize", VERB),
    ("ise", VERB),
    ("tion", NOUN),
    ("sion", NOUN),
    ("ness", NOUN),
    ("ment", NOUN),
    ("ity", NOUN),
    ("ous", ADJ),
    ("ful", ADJ),
    ("ive", ADJ),
    ("able", ADJ),
    ("ible", ADJ),
    ("al", ADJ),
)


def default_pos_tag(tokens: list[str]) -> list[str]:
    """Deterministic coarse tagger: closed-class lexicon, suffix rules, NOUN fallback."""
    return [_tag_one(tok) for tok in tokens]


def _tag_one(token: str) -> str:
    if token in _FUNCTION_WORDS:
        return OTHER
    for suffix, tag in _SUFFIX_RULES:
        if len(token) > len(suffix) + 1 and token.endswith(suffix):
            return tag
    return NOUN


@dataclass(frozen=True)
class CandidateEntry:
    word: str
    distance: float
    pos: str


@dataclass(frozen=True)
class CandidateList:
    source: str
    source_ideology: str
    topic: str
    entries: tuple[CandidateEntry, ...]

    def words(self) -> list[str]:
        return [e.word for e in self.entries]


class CandidateRetriever:
    """Ranks POS-matching neutral-ideology neighbors for polar words.

    POS is assigned per word type with the (pluggable) tagger, so filtering
    needs no sentence context. The retriever caches the neutral fused matrix
    per topic; the underlying model must not be mutated.
    """

    def __init__(self, model: AttributeModel, pos_tagger: Callable[[list[str]], list[str]] | None = None):
        self.model = model
        tagger = pos_tagger or default_pos_tag
        self.pos_by_id = tagger(model.vocab.tokens)
        if len(self.pos_by_id) != len(model.vocab):
            raise ValueError("POS tagger must return one tag per token")
        self._neutral_cache: dict[str, np.ndarray] = {}

    def _neutral_matrix(self, topic: str) -> np.ndarray:
        if topic not in self._neutral_cache:
            self._neutral_cache[topic] = self.model.compose_matrix("neutral", topic).astype(np.float64)
        return self._neutral_cache[topic]

    def neutral_candidates(
        self, word: str, source_ideology: str, topic: str, k: int = DEFAULT_CAPACITY
    ) -> CandidateList:
        """Top-k nearest neutral-composed words sharing the source word's POS."""
        if source_ideology not in ("liberal", "conservative"):
            raise UnknownOptionError(f"source must be polar (liberal or conservative), got {source_ideology!r}")
        vocab = self.model.vocab
        wid = vocab.id(word)
        query = self.model.compose(word, source_ideology, topic).astype(np.float64)
        dists = cosine_distances(self._neutral_matrix(topic), query)
        source_pos = self.pos_by_id[wid]
        keep = [
            i
            for i in range(1, len(vocab))  # id 0 is UNK
            if i != wid and self.pos_by_id[i] == source_pos
        ]
        keep.sort(key=lambda i: (dists[i], vocab.tokens[i]))
        entries = tuple(
            CandidateEntry(vocab.tokens[i], float(dists[i]), source_pos) for i in keep[: max(k, 0)]
        )
        return CandidateList(word, source_ideology, topic, entries)
