"""Per-option word salience and the reversed banks used for negative sampling.

Salience for (word, option) is the geometric mean of two smoothed
probabilities: that the word belongs to the option, and that the option
emits the word. Words salient for an option are *down*-weighted in that
option's negative-sampling bank, so negatives come mostly from words the
option does not own.
"""

from __future__ import annotations

import numpy as np

from depolar.corpus import Vocabulary
from depolar.errors import CorpusError, UnknownOptionError

MIN_SHIFT = 1e-6
DEFAULT_BANK_MASS = 10**8


def smoothed_terms(vocab: Vocabulary, attribute: str) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Add-one-smoothed P(option|word) and P(word|option) vectors per option.

    These are the raw inputs to the salience score, before normalization.
    The UNK sentinel holds folded rare-word counts and is not a real word,
    so it does not enter the smoothing denominators.
    """
    options = vocab.options(attribute)
    totals = vocab.counts.astype(np.float64)
    n_options = len(options)
    n_words = len(vocab) - 1
    opt_given_word: dict[str, np.ndarray] = {}
    word_given_opt: dict[str, np.ndarray] = {}
    for opt in options:
        cell = vocab.option_counts[attribute][opt].astype(np.float64)
        opt_given_word[opt] = (cell + 1.0) / (totals + n_options)
        word_given_opt[opt] = (cell + 1.0) / (cell.sum() + n_words)
    return opt_given_word, word_given_opt


def _zscore(vec: np.ndarray) -> np.ndarray:
    """Z-score the whole vector using stats over real words (UNK row excluded)."""
    real = vec[1:]
    mu = real.mean()
    sigma = real.std()
    if sigma == 0:
        return np.zeros_like(vec)
    return (vec - mu) / sigma


class SalienceTable:
    """Salience score for every (word, attribute option) pair.

    Both smoothed terms are z-scored across the vocabulary per option, then
    shifted so the attribute-wide minimum over real words sits at
    ``MIN_SHIFT``; the score is the geometric mean of the two shifted terms,
    so scores stay finite and strictly positive.
    """

    def __init__(self, vocab: Vocabulary):
        if len(vocab) < 2:
            raise CorpusError("vocabulary has no real words")
        self.vocab = vocab
        self.scores: dict[str, dict[str, np.ndarray]] = {}
        for attribute, options in vocab.attributes:
            term1, term2 = smoothed_terms(vocab, attribute)
            z1 = {opt: _zscore(term1[opt]) for opt in options}
            z2 = {opt: _zscore(term2[opt]) for opt in options}
            global_min = min(vec[1:].min() for term in (z1, z2) for vec in term.values())
            shift = -global_min + MIN_SHIFT
            self.scores[attribute] = {
                opt: np.sqrt(
                    np.maximum(z1[opt] + shift, MIN_SHIFT) * np.maximum(z2[opt] + shift, MIN_SHIFT)
                )
                for opt in options
            }

    def score(self, word: str, attribute: str, option: str) -> float:
        """Salience of ``word`` for ``option``; raises on unknown words."""
        per_option = self.option_scores(attribute, option)
        return float(per_option[self.vocab.id(word)])

    def option_scores(self, attribute: str, option: str) -> np.ndarray:
        if attribute not in self.scores:
            raise UnknownOptionError(f"unknown attribute {attribute!r}")
        per_attr = self.scores[attribute]
        if option not in per_attr:
            raise UnknownOptionError(f"unknown option {option!r} for attribute {attribute!r}")
        return per_attr[option]

    def dump_rows(self) -> list[tuple[str, str, str, float]]:
        """(attribute, option, word, salience) rows sorted by descending score."""
        rows = []
        for attribute, options in self.vocab.attributes:
            for option in options:
                scores = self.scores[attribute][option]
                order = sorted(range(1, len(scores)), key=lambda i: (-scores[i], self.vocab.tokens[i]))
                rows.extend((attribute, option, self.vocab.tokens[i], float(scores[i])) for i in order)
        return rows


class ReversedBank:
    """Sampling pool for one option with salient words down-weighted.

    Weight of word w is proportional to 1/p with p its share of the option's
    total salience; weights are scaled so the pool's total mass is ``mass``
    rather than materializing that many entries. UNK is excluded.
    """

    def __init__(self, attribute: str, option: str, weights: np.ndarray, ids: np.ndarray, mass: float):
        self.attribute = attribute
        self.option = option
        self.ids = ids
        total = weights.sum()
        self.probabilities = weights / total
        self.weights = self.probabilities * mass
        self.mass = mass
        self._cumulative = np.cumsum(self.probabilities)

    @classmethod
    def build(
        cls,
        table: SalienceTable,
        attribute: str,
        option: str,
        mass: float = DEFAULT_BANK_MASS,
    ) -> "ReversedBank":
        scores = table.option_scores(attribute, option)
        ids = np.arange(1, len(scores), dtype=np.int32)  # skip UNK at id 0
        salience = scores[ids]
        p = salience / salience.sum()
        return cls(attribute, option, 1.0 / p, ids, mass)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n word ids i.i.d. proportional to bank weights."""
        if n <= 0:
            raise ValueError(f"sample size must be positive, got {n}")
        return self.sample_from_uniforms(rng.random(n))

    def sample_from_uniforms(self, uniforms: np.ndarray) -> np.ndarray:
        """Map pre-drawn uniforms in [0,1) to word ids (for batched training)."""
        picks = np.searchsorted(self._cumulative, uniforms, side="right")
        picks = np.minimum(picks, len(self.ids) - 1)
        return self.ids[picks]

    def probability(self, word_id: int) -> float:
        pos = int(word_id) - 1
        if pos < 0 or pos >= len(self.ids):
            return 0.0
        return float(self.probabilities[pos])


def build_banks(table: SalienceTable, mass: float = DEFAULT_BANK_MASS) -> dict[tuple[str, str], ReversedBank]:
    """One reversed bank per (attribute, option)."""
    banks = {}
    for attribute, options in table.vocab.attributes:
        for option in options:
            banks[(attribute, option)] = ReversedBank.build(table, attribute, option, mass)
    return banks
