"""BLEU-based fluency of a rewritten paragraph against its original."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass


@dataclass(frozen=True)
class BleuConfig:
    max_order: int = 4

    def __post_init__(self) -> None:
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")


DEFAULT_BLEU = BleuConfig()


def bleu(candidate: list[str], reference: list[str], config: BleuConfig = DEFAULT_BLEU) -> float:
    """Geometric mean of clipped n-gram precisions times the brevity penalty.

    Uniform weights over orders 1..max_order against a single reference.
    Zero unigram precision yields 0; zero counts at higher orders get
    add-one smoothing (token swaps in short paragraphs routinely zero the
    4-gram overlap, which would otherwise nuke the whole score).
    """
    if not reference:
        raise ValueError("empty reference")
    if not candidate:
        return 0.0
    counts = [
        _clipped_matches(candidate, reference, order) for order in range(1, config.max_order + 1)
    ]
    return bleu_from_counts(counts, len(candidate), len(reference))


def bleu_from_counts(counts: list[tuple[int, int]], candidate_len: int, reference_len: int) -> float:
    """Assemble the score from per-order (clipped matches, total n-grams).

    Shared by the plain scorer and the annealer's incremental counters so
    the smoothing rules cannot drift apart.
    """
    log_sum = 0.0
    max_order = len(counts)
    for order, (matched, total) in enumerate(counts, start=1):
        if total == 0:
            matched, total = 1, 1  # candidate shorter than the order
        elif matched == 0:
            if order == 1:
                return 0.0
            matched, total = 1, total + 1
        log_sum += math.log(matched / total) / max_order

    brevity = 1.0 if candidate_len >= reference_len else math.exp(1.0 - reference_len / candidate_len)
    return brevity * math.exp(log_sum)


def _clipped_matches(candidate: list[str], reference: list[str], order: int) -> tuple[int, int]:
    cand = Counter(tuple(candidate[i : i + order]) for i in range(len(candidate) - order + 1))
    ref = Counter(tuple(reference[i : i + order]) for i in range(len(reference) - order + 1))
    matched = sum(min(count, ref[gram]) for gram, count in cand.items())
    return matched, sum(cand.values())
