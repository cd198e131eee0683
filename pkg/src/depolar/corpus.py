"""Corpus ingestion: tokenization, phrase merging, and count tables.

Input is UTF-8 JSON Lines, one article per line with exactly the keys
``id``, ``ideology``, ``topic``, ``text``. Every downstream score is
computed from the per-(attribute, option) counts built here.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np

from depolar.errors import CorpusError, OutOfVocabularyError, UnknownOptionError

log = logging.getLogger(__name__)

IDEOLOGIES = ("liberal", "neutral", "conservative")
UNK_TOKEN = "<unk>"

ARTICLE_KEYS = {"id", "ideology", "topic", "text"}

# Punctuation is deleted in place; hyphens/underscores survive inside tokens.
_PUNCT_RE = re.compile(r"[^\w\s\-]")
_EDGE_RE = re.compile(r"^[-_]+|[-_]+$")
_BLANK_LINE_RE = re.compile(r"\n[ \t]*\n+")


def tokenize(text: str) -> list[str]:
    """Lowercase tokens with punctuation stripped (intra-token ``-``/``_`` kept)."""
    tokens, _ = tokenize_paragraphs(text)
    return tokens


def tokenize_paragraphs(text: str) -> tuple[list[str], list[tuple[int, int]]]:
    """Tokenize and record paragraph spans.

    A paragraph boundary is a blank line; a single newline is not. Returns
    the flat token list plus non-overlapping ``(start, end)`` index spans,
    one per non-empty paragraph.
    """
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    for chunk in _BLANK_LINE_RE.split(text):
        para = _tokenize_chunk(chunk)
        if not para:
            continue
        start = len(tokens)
        tokens.extend(para)
        spans.append((start, len(tokens)))
    return tokens, spans


def _tokenize_chunk(chunk: str) -> list[str]:
    cleaned = _PUNCT_RE.sub("", chunk.lower())
    out = []
    for piece in cleaned.split():
        piece = _EDGE_RE.sub("", piece)
        if piece:
            out.append(piece)
    return out


@dataclass(frozen=True)
class Article:
    """One labeled document: raw text plus its tokenized form."""

    id: str
    ideology: str
    topic: str
    text: str
    tokens: list[str] = field(default_factory=list)
    paragraphs: list[tuple[int, int]] = field(default_factory=list)


@dataclass(frozen=True)
class Corpus:
    articles: list[Article]
    topics: tuple[str, ...]

    def __post_init__(self) -> None:
        topic_set = set(self.topics)
        for art in self.articles:
            if art.ideology not in IDEOLOGIES:
                raise UnknownOptionError(f"unknown ideology {art.ideology!r} in article {art.id!r}")
            if art.topic not in topic_set:
                raise UnknownOptionError(f"unknown topic {art.topic!r} in article {art.id!r}")

    def subset(self, attribute: str, option: str) -> list[Article]:
        if attribute == "ideology":
            return [a for a in self.articles if a.ideology == option]
        if attribute == "topic":
            return [a for a in self.articles if a.topic == option]
        raise UnknownOptionError(f"unknown attribute {attribute!r}")


def make_corpus(articles: list[Article], topics: tuple[str, ...] | None = None) -> Corpus:
    """Build a Corpus, tokenizing any article whose tokens are missing."""
    prepared = []
    for art in articles:
        if not art.tokens and art.text:
            tokens, spans = tokenize_paragraphs(art.text)
            art = replace(art, tokens=tokens, paragraphs=spans)
        prepared.append(art)
    if topics is None:
        topics = tuple(sorted({a.topic for a in prepared}))
    return Corpus(prepared, topics)


def load_jsonl(path: str, strict: bool = False, topics: tuple[str, ...] | None = None) -> Corpus:
    """Read a JSONL corpus file and tokenize every article.

    Unknown keys are rejected in strict mode and logged otherwise; missing
    or mistyped keys are always an error.
    """
    articles = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            articles.append(_parse_article(obj, f"{path}:{lineno}", strict))
    return make_corpus(articles, topics)


def _parse_article(obj: object, where: str, strict: bool) -> Article:
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: expected a JSON object")
    extra = set(obj) - ARTICLE_KEYS
    if extra:
        if strict:
            raise CorpusError(f"{where}: unknown keys {sorted(extra)}")
        log.warning("%s: ignoring unknown keys %s", where, sorted(extra))
    missing = ARTICLE_KEYS - set(obj)
    if missing:
        raise CorpusError(f"{where}: missing keys {sorted(missing)}")
    for key in ARTICLE_KEYS:
        if not isinstance(obj[key], str):
            raise CorpusError(f"{where}: key {key!r} must be a string")
    if obj["ideology"] not in IDEOLOGIES:
        raise CorpusError(f"{where}: ideology must be one of {IDEOLOGIES}")
    return Article(id=obj["id"], ideology=obj["ideology"], topic=obj["topic"], text=obj["text"])


@dataclass(frozen=True)
class PhraseTable:
    """Bigram pairs worth merging into single ``a_b`` tokens, with PMI scores."""

    pairs: dict[tuple[str, str], float]
    threshold: float

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return pair in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)


def detect_phrases(corpus: Corpus, pmi_threshold: float = 3.0, min_pair_count: int = 10) -> PhraseTable:
    """Find adjacent-token pairs with PMI (natural log) above the threshold.

    Pairs never cross paragraph boundaries.
    """
    unigrams: Counter[str] = Counter()
    bigrams: Counter[tuple[str, str]] = Counter()
    n_tokens = 0
    n_pairs = 0
    for art in corpus.articles:
        for start, end in art.paragraphs:
            para = art.tokens[start:end]
            unigrams.update(para)
            n_tokens += len(para)
            for a, b in zip(para, para[1:]):
                bigrams[(a, b)] += 1
                n_pairs += 1
    pairs: dict[tuple[str, str], float] = {}
    if n_pairs == 0:
        return PhraseTable(pairs, pmi_threshold)
    for (a, b), count in bigrams.items():
        if count < min_pair_count:
            continue
        pmi = math.log(count * n_tokens * n_tokens / (n_pairs * unigrams[a] * unigrams[b]))
        if pmi >= pmi_threshold:
            pairs[(a, b)] = pmi
    return PhraseTable(pairs, pmi_threshold)


def merge_phrases(tokens: list[str], table: PhraseTable) -> list[str]:
    """Single left-to-right pass; each token joins at most one merge."""
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        if i + 1 < n and (tokens[i], tokens[i + 1]) in table:
            out.append(tokens[i] + "_" + tokens[i + 1])
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


def apply_phrases(corpus: Corpus, table: PhraseTable) -> Corpus:
    """Merge phrases in every article, recomputing paragraph spans."""
    if len(table) == 0:
        return corpus
    merged_articles = []
    for art in corpus.articles:
        tokens: list[str] = []
        spans: list[tuple[int, int]] = []
        for start, end in art.paragraphs:
            para = merge_phrases(art.tokens[start:end], table)
            spans.append((len(tokens), len(tokens) + len(para)))
            tokens.extend(para)
        merged_articles.append(replace(art, tokens=tokens, paragraphs=spans))
    return Corpus(merged_articles, corpus.topics)


class Vocabulary:
    """Dense token ids plus total and per-(attribute, option) counts.

    Id 0 is the UNK sentinel; every other id is assigned by descending
    total count with lexicographic tie-break, so builds are deterministic.
    """

    def __init__(
        self,
        tokens: list[str],
        counts: np.ndarray,
        option_counts: dict[str, dict[str, np.ndarray]],
        attributes: list[tuple[str, tuple[str, ...]]],
    ):
        self.tokens = tokens
        self.index = {tok: i for i, tok in enumerate(tokens)}
        self.counts = counts
        self.option_counts = option_counts
        self.attributes = attributes
        self.unk_id = 0

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise OutOfVocabularyError(f"out of vocabulary: {token!r}") from None

    def encode(self, tokens: list[str]) -> np.ndarray:
        """Map tokens to ids, replacing out-of-vocabulary tokens with UNK."""
        return np.array([self.index.get(t, self.unk_id) for t in tokens], dtype=np.int32)

    def count(self, token: str) -> int:
        return int(self.counts[self.id(token)])

    def count_in(self, token: str, attribute: str, option: str) -> int:
        try:
            per_option = self.option_counts[attribute]
        except KeyError:
            raise UnknownOptionError(f"unknown attribute {attribute!r}") from None
        if option not in per_option:
            raise UnknownOptionError(f"unknown option {option!r} for attribute {attribute!r}")
        return int(per_option[option][self.id(token)])

    def options(self, attribute: str) -> tuple[str, ...]:
        for name, opts in self.attributes:
            if name == attribute:
                return opts
        raise UnknownOptionError(f"unknown attribute {attribute!r}")


def build_vocab(corpus: Corpus, min_count: int = 5) -> Vocabulary:
    """Tabulate counts; tokens under ``min_count`` fold into the UNK sentinel."""
    if not corpus.articles:
        raise CorpusError("empty corpus")
    attributes = [("ideology", IDEOLOGIES), ("topic", corpus.topics)]

    totals: Counter[str] = Counter()
    cell_counts: dict[tuple[str, str], Counter[str]] = {}
    for attr, opts in attributes:
        for opt in opts:
            cell_counts[(attr, opt)] = Counter()
    for art in corpus.articles:
        totals.update(art.tokens)
        cell_counts[("ideology", art.ideology)].update(art.tokens)
        cell_counts[("topic", art.topic)].update(art.tokens)

    kept = sorted(
        (tok for tok, c in totals.items() if c >= min_count and tok != UNK_TOKEN),
        key=lambda tok: (-totals[tok], tok),
    )
    tokens = [UNK_TOKEN] + kept
    tok_to_id = {tok: i for i, tok in enumerate(tokens)}

    counts = np.zeros(len(tokens), dtype=np.int64)
    option_counts: dict[str, dict[str, np.ndarray]] = {
        attr: {opt: np.zeros(len(tokens), dtype=np.int64) for opt in opts} for attr, opts in attributes
    }
    for tok, c in totals.items():
        counts[tok_to_id.get(tok, 0)] += c
    for (attr, opt), counter in cell_counts.items():
        arr = option_counts[attr][opt]
        for tok, c in counter.items():
            arr[tok_to_id.get(tok, 0)] += c

    return Vocabulary(tokens, counts, option_counts, attributes)
