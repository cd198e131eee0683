"""Independent brute-force oracles used by unit and acceptance tests.

Everything here is deliberately written with plain dicts, loops and
``math`` so it shares no code path with the package's numpy
implementations.
"""

import math
from collections import Counter

from depolar.corpus import IDEOLOGIES, UNK_TOKEN


def oracle_counts(articles, topics, min_count):
    """Count tokens per (attribute, option), folding rare tokens into UNK."""
    totals = Counter()
    for art in articles:
        totals.update(art.tokens)
    kept = {tok for tok, c in totals.items() if c >= min_count}

    def fold(tok):
        return tok if tok in kept else UNK_TOKEN

    folded_totals = Counter()
    cells = {("ideology", o): Counter() for o in IDEOLOGIES}
    cells.update({("topic", t): Counter() for t in topics})
    for art in articles:
        for tok in art.tokens:
            w = fold(tok)
            folded_totals[w] += 1
            cells[("ideology", art.ideology)][w] += 1
            cells[("topic", art.topic)][w] += 1
    words = sorted(kept)
    return words, folded_totals, cells


def oracle_salience(articles, topics, min_count):
    """Recompute salience for every (attribute, option, word) from raw counts.

    Returns {(attribute, option, word): score} over real words (no UNK).
    """
    words, totals, cells = oracle_counts(articles, topics, min_count)
    attributes = [("ideology", list(IDEOLOGIES)), ("topic", list(topics))]
    n_words = len(words)
    out = {}
    for attribute, options in attributes:
        n_opts = len(options)
        term1 = {}
        term2 = {}
        for opt in options:
            cell = cells[(attribute, opt)]
            cell_total = sum(cell.values())
            for w in words:
                term1[(opt, w)] = (cell[w] + 1.0) / (totals[w] + n_opts)
                term2[(opt, w)] = (cell[w] + 1.0) / (cell_total + n_words)
        z1 = _oracle_zscore(term1, options, words)
        z2 = _oracle_zscore(term2, options, words)
        global_min = min(min(z1.values()), min(z2.values()))
        shift = -global_min + 1e-6
        for opt in options:
            for w in words:
                a = max(z1[(opt, w)] + shift, 1e-6)
                b = max(z2[(opt, w)] + shift, 1e-6)
                out[(attribute, opt, w)] = math.sqrt(a * b)
    return out


def _oracle_zscore(term, options, words):
    z = {}
    for opt in options:
        vals = [term[(opt, w)] for w in words]
        mu = sum(vals) / len(vals)
        var = sum((v - mu) ** 2 for v in vals) / len(vals)
        sigma = math.sqrt(var)
        for w in words:
            z[(opt, w)] = (term[(opt, w)] - mu) / sigma if sigma > 0 else 0.0
    return z


def oracle_bleu(candidate, reference, max_order=4):
    """Clipped n-gram precision BLEU with add-one smoothing on zero
    higher-order precisions, computed with plain Counters."""
    if not reference:
        raise ValueError("empty reference")
    if not candidate:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_order + 1):
        cand = Counter(tuple(candidate[i : i + n]) for i in range(len(candidate) - n + 1))
        ref = Counter(tuple(reference[i : i + n]) for i in range(len(reference) - n + 1))
        total = sum(cand.values())
        if total == 0:
            matched, total = 1, 1  # candidate shorter than n: treat as smoothed empty order
        else:
            matched = sum(min(c, ref[g]) for g, c in cand.items())
        if matched == 0:
            if n == 1:
                return 0.0
            matched, total = 1, total + 1
        log_sum += math.log(matched / total) / max_order
    c, r = len(candidate), len(reference)
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum)


def oracle_paragraph_polarity(tokens, z_by_word):
    """Sum of positive z-scores over token occurrences."""
    total = 0.0
    for tok in tokens:
        z = z_by_word.get(tok)
        if z is not None and z > 0:
            total += z
    return total


def oracle_reward(modified, original, z_by_word, lam=0.01):
    """Reward of a modification, recomputed from scratch."""
    s = sum(1 for a, b in zip(modified, original) if a != b)
    pol = oracle_paragraph_polarity(modified, z_by_word)
    flu = oracle_bleu(modified, original)
    return (-pol + flu) / (s + lam)
