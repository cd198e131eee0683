"""Evaluation kit: synthetic planted-marker corpora, an external ideology
classifier, and the depolarization success-rate metric.

The synthetic generator plants ideology-exclusive marker words (with neutral
synonyms occupying the same contexts in neutral documents) into shared
background text, which makes detection, retrieval and end-to-end rewriting
measurable at desk scale.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from depolar.corpus import IDEOLOGIES, Article, Corpus, make_corpus, tokenize
from depolar.errors import CorpusError, EvalError

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def _pseudo_words(rng: np.random.Generator, n: int, taken: set[str], syllables=(2, 3), suffix: str = "") -> list[str]:
    """Unique pronounceable nonsense words; all end in a vowel unless suffixed."""
    out: list[str] = []
    while len(out) < n:
        k = int(rng.integers(syllables[0], syllables[1] + 1))
        word = "".join(
            _CONSONANTS[rng.integers(0, len(_CONSONANTS))] + _VOWELS[rng.integers(0, len(_VOWELS))]
            for _ in range(k)
        ) + suffix
        if word not in taken:
            taken.add(word)
            out.append(word)
    return out


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a planted-marker corpus.

    Marker sets may be passed explicitly as {(ideology, topic): words};
    when omitted they are generated. Markers and their neutral synonyms end
    in "-ly" so the whole replacement pool shares one coarse POS, mirroring
    how real polar vocabulary clusters in content-word classes.
    """

    topics: tuple[str, ...] = ("energy", "transit")
    markers_per_side: int = 4
    docs_per_cell: int = 100
    tokens_per_doc: int = 120
    insertion_rate: float = 0.05
    background_size: int = 600
    context_block_size: int = 32
    seed: int = 13
    markers: dict[tuple[str, str], tuple[str, ...]] | None = None
    synonyms: dict[str, str] | None = None
    background: tuple[str, ...] | None = None


@dataclass
class SynthTruth:
    """What was planted where; consumed by tests and the eval report."""

    markers: dict[tuple[str, str], tuple[str, ...]]
    synonyms: dict[str, str]
    background: tuple[str, ...]
    context_blocks: dict[str, list[list[str]]]

    def polar_markers(self) -> list[tuple[str, str, str]]:
        out = []
        for (ideology, topic), words in sorted(self.markers.items()):
            out.extend((word, ideology, topic) for word in words)
        return out

    def to_json_dict(self) -> dict:
        return {
            "markers": {f"{i}|{t}": list(words) for (i, t), words in sorted(self.markers.items())},
            "synonyms": dict(sorted(self.synonyms.items())),
            "background": list(self.background),
            "context_blocks": self.context_blocks,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SynthTruth":
        markers = {}
        for key, words in obj["markers"].items():
            ideology, _, topic = key.partition("|")
            markers[(ideology, topic)] = tuple(words)
        return cls(
            markers=markers,
            synonyms=dict(obj["synonyms"]),
            background=tuple(obj["background"]),
            context_blocks={t: [list(b) for b in blocks] for t, blocks in obj["context_blocks"].items()},
        )


def synth_corpus(spec: SynthSpec) -> tuple[Corpus, SynthTruth]:
    """Generate the corpus and its ground truth, deterministically per seed."""
    rng = np.random.default_rng(spec.seed)
    taken: set[str] = set()

    if spec.background is not None:
        background = list(spec.background)
        taken.update(background)
    else:
        background = _pseudo_words(rng, spec.background_size, taken)

    markers: dict[tuple[str, str], list[str]] = {}
    synonyms: dict[str, str] = {}
    if spec.markers is not None:
        markers = {key: list(words) for key, words in spec.markers.items()}
        if spec.synonyms is None:
            raise CorpusError("explicit markers require an explicit synonym map")
        synonyms = dict(spec.synonyms)
        for words in markers.values():
            taken.update(words)
        taken.update(synonyms.values())
    else:
        for topic in spec.topics:
            for side in ("liberal", "conservative"):
                words = _pseudo_words(rng, spec.markers_per_side, taken, suffix="ly")
                markers[(side, topic)] = words
                for word in words:
                    synonyms[word] = _pseudo_words(rng, 1, taken, suffix="ly")[0]

    _check_disjoint(markers, synonyms, spec.topics)

    # Each marker/synonym pair gets a signature block of context words for
    # its template slots; the liberal and conservative pair with the same
    # index share a block, so block words stay ideology-balanced.
    context_blocks: dict[str, list[list[str]]] = {}
    for topic in spec.topics:
        pool = _pseudo_words(rng, spec.markers_per_side * spec.context_block_size, taken)
        context_blocks[topic] = [
            pool[j * spec.context_block_size : (j + 1) * spec.context_block_size]
            for j in range(spec.markers_per_side)
        ]

    # Near-uniform per-topic background distribution (mild tilt for topical
    # flavor). Keeping background counts homogeneous keeps the polarity
    # noise floor tight, which is what separates planted words from noise.
    base = np.ones(len(background))
    bg_weights = {}
    for topic in spec.topics:
        tilt = 1.0 + 0.2 * rng.random(len(background))
        w = base * tilt
        bg_weights[topic] = w / w.sum()

    articles = []
    for topic in spec.topics:
        for ideology in IDEOLOGIES:
            for i in range(spec.docs_per_cell):
                tokens = _build_doc(
                    rng, spec, topic, ideology, markers, synonyms, context_blocks,
                    background, bg_weights[topic],
                )
                text = _render_text(tokens)
                articles.append(
                    Article(id=f"{topic}-{ideology}-{i:03d}", ideology=ideology, topic=topic, text=text)
                )

    truth = SynthTruth(
        markers={k: tuple(v) for k, v in markers.items()},
        synonyms=synonyms,
        background=tuple(background),
        context_blocks=context_blocks,
    )
    return make_corpus(articles, tuple(spec.topics)), truth


def _check_disjoint(markers, synonyms, topics) -> None:
    for topic in topics:
        sets = [set(markers.get((side, topic), ())) for side in ("liberal", "conservative")]
        if sets[0] & sets[1]:
            raise CorpusError(f"overlapping marker sets for topic {topic!r}: {sorted(sets[0] & sets[1])}")
    all_markers = {w for words in markers.values() for w in words}
    if all_markers & set(synonyms.values()):
        raise CorpusError("a neutral synonym collides with a marker")


def _build_doc(rng, spec, topic, ideology, markers, synonyms, context_blocks, background, bg_w):
    """Token segments: background stream with 7-token marker events mixed in.

    Event shape [ctx, ctx, ctx, MARKER, ctx, ctx, ctx]: every context slot
    draws from the pair's signature block; blocks are wide enough that no
    bigram becomes frequent enough to merge as a phrase.
    """
    segments: list[list[str]] = []
    length = 0
    n_pairs = spec.markers_per_side
    while length < spec.tokens_per_doc:
        if spec.insertion_rate > 0 and rng.random() < spec.insertion_rate:
            j = int(rng.integers(0, n_pairs))
            if ideology == "neutral":
                side = "liberal" if rng.random() < 0.5 else "conservative"
                slot_word = synonyms[markers[(side, topic)][j]]
            else:
                slot_word = markers[(ideology, topic)][j]
            block = context_blocks[topic][j]
            c = [block[int(rng.integers(0, len(block)))] for _ in range(6)]
            seg = [c[0], c[1], c[2], slot_word, c[3], c[4], c[5]]
        else:
            seg = [background[_draw(rng, bg_w)]]
        segments.append(seg)
        length += len(seg)
    return segments


def _draw(rng, weights) -> int:
    return int(np.searchsorted(np.cumsum(weights), rng.random()))


def _render_text(segments: list[list[str]]) -> str:
    """Join segments into two paragraphs, breaking at a segment boundary."""
    total = sum(len(s) for s in segments)
    flat_first: list[str] = []
    flat_second: list[str] = []
    count = 0
    for seg in segments:
        if count < total // 2:
            flat_first.extend(seg)
        else:
            flat_second.extend(seg)
        count += len(seg)
    if not flat_second:
        return " ".join(flat_first)
    return " ".join(flat_first) + "\n\n" + " ".join(flat_second)


def write_synth(spec: SynthSpec, corpus_path: str, truth_path: str | None = None) -> tuple[Corpus, SynthTruth]:
    """Write the corpus JSONL (and optional truth JSON) to disk."""
    corpus, truth = synth_corpus(spec)
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for art in corpus.articles:
            fh.write(
                json.dumps(
                    {"id": art.id, "ideology": art.ideology, "topic": art.topic, "text": art.text},
                    sort_keys=True,
                )
                + "\n"
            )
    if truth_path:
        Path(truth_path).write_text(
            json.dumps(truth.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return corpus, truth


# -- external ideology classifier ------------------------------------------


@dataclass(frozen=True)
class ClassifierConfig:
    dims: int = 500
    ngram_order: int = 3
    buckets: int = 1 << 16
    epochs: int = 10
    lr: float = 1.0
    seed: int = 0


class IdeologyClassifier:
    """Averaged hashed bag-of-n-grams linear classifier over the 3 ideologies.

    N-grams up to the configured order hash into a shared embedding table;
    a document is the mean of its n-gram vectors, classified by a softmax
    layer. Training is plain SGD with a seeded shuffle.
    """

    LABELS = IDEOLOGIES

    def __init__(self, config: ClassifierConfig, emb=None, weights=None, bias=None):
        self.config = config
        self.emb = emb if emb is not None else np.zeros((config.buckets, config.dims), dtype=np.float32)
        self.weights = weights if weights is not None else np.zeros((config.dims, 3), dtype=np.float32)
        self.bias = bias if bias is not None else np.zeros(3, dtype=np.float32)

    def ngram_ids(self, tokens: list[str]) -> np.ndarray:
        grams = []
        for n in range(1, self.config.ngram_order + 1):
            grams.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
        if not grams:
            return np.zeros(0, dtype=np.int64)
        return np.array(
            [zlib.crc32(g.encode("utf-8")) % self.config.buckets for g in grams], dtype=np.int64
        )

    def probabilities(self, tokens: list[str]) -> np.ndarray:
        ids = self.ngram_ids(tokens)
        doc = self.emb[ids].mean(axis=0) if len(ids) else np.zeros(self.config.dims, dtype=np.float32)
        logits = doc @ self.weights + self.bias
        logits = logits - logits.max()
        expd = np.exp(logits)
        return expd / expd.sum()

    def classify(self, tokens: list[str]) -> str:
        return self.LABELS[int(np.argmax(self.probabilities(tokens)))]

    def classify_text(self, text: str) -> str:
        return self.classify(tokenize(text))

    def save(self, path: str) -> None:
        np.savez(
            path,
            emb=self.emb,
            weights=self.weights,
            bias=self.bias,
            config=json.dumps(self.config.__dict__, sort_keys=True),
        )

    @classmethod
    def load(cls, path: str) -> "IdeologyClassifier":
        data = np.load(path, allow_pickle=False)
        config = ClassifierConfig(**json.loads(str(data["config"])))
        return cls(config, data["emb"].copy(), data["weights"].copy(), data["bias"].copy())


def train_classifier(corpus: Corpus, config: ClassifierConfig | None = None) -> IdeologyClassifier:
    """Fit the classifier on the corpus; every ideology must be present."""
    config = config or ClassifierConfig()
    present = {a.ideology for a in corpus.articles}
    missing = set(IDEOLOGIES) - present
    if missing:
        raise EvalError(f"missing training documents for classes: {sorted(missing)}")

    clf = IdeologyClassifier(config)
    rng = np.random.default_rng(config.seed)
    clf.emb = ((rng.random((config.buckets, config.dims)) - 0.5) / config.dims).astype(np.float32)
    # nonzero output weights break the bilinear dead zone at the start
    clf.weights = (rng.standard_normal((config.dims, 3)) / np.sqrt(config.dims)).astype(np.float32)
    label_of = {lab: i for i, lab in enumerate(IdeologyClassifier.LABELS)}
    docs = [(clf.ngram_ids(a.tokens), label_of[a.ideology]) for a in corpus.articles]

    n_steps = len(docs) * config.epochs
    step = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(docs))
        for di in order:
            ids, label = docs[di]
            if len(ids) == 0:
                step += 1
                continue
            lr = config.lr * (1.0 - step / n_steps)
            step += 1
            rows = clf.emb[ids]
            doc = rows.mean(axis=0)
            logits = doc @ clf.weights + clf.bias
            logits = logits - logits.max()
            expd = np.exp(logits)
            probs = expd / expd.sum()
            grad_logits = -probs
            grad_logits[label] += 1.0
            grad_doc = clf.weights @ grad_logits
            clf.weights += lr * np.outer(doc, grad_logits)
            clf.bias += lr * grad_logits
            update = (lr / len(ids)) * grad_doc
            np.add.at(clf.emb, ids, update[None, :].repeat(len(ids), axis=0))
    return clf


def classifier_f1(clf: IdeologyClassifier, articles: list[Article]) -> float:
    """Macro F1 over the three classes."""
    label_of = {lab: i for i, lab in enumerate(IdeologyClassifier.LABELS)}
    tp = np.zeros(3)
    fp = np.zeros(3)
    fn = np.zeros(3)
    for artx in articles:
        want = label_of[artx.ideology]
        got = label_of[clf.classify(artx.tokens)]
        if got == want:
            tp[want] += 1
        else:
            fp[got] += 1
            fn[want] += 1
    f1s = []
    for k in range(3):
        prec = tp[k] / (tp[k] + fp[k]) if tp[k] + fp[k] else 0.0
        rec = tp[k] / (tp[k] + fn[k]) if tp[k] + fn[k] else 0.0
        f1s.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return float(np.mean(f1s))


# -- success rate ------------------------------------------------------------


def success_rate(before_labels: list[str], after_labels: list[str]) -> float:
    """Percentage of initially polar documents that became neutral.

    (count(after neutral) - count(before neutral)) over the number of
    documents initially labeled liberal or conservative, times 100.
    """
    if len(before_labels) != len(after_labels):
        raise EvalError("before/after label lists must cover the same documents")
    before_n = sum(1 for lab in before_labels if lab == "neutral")
    after_n = sum(1 for lab in after_labels if lab == "neutral")
    polar = sum(1 for lab in before_labels if lab in ("liberal", "conservative"))
    if polar == 0:
        raise EvalError("zero denominator: no initially polar documents")
    return 100.0 * (after_n - before_n) / polar


def success_rate_from_counts(before: dict[str, int], after_neutral: int) -> float:
    """Same metric from aggregate counts (e.g. published tables)."""
    polar = before.get("liberal", 0) + before.get("conservative", 0)
    if polar == 0:
        raise EvalError("zero denominator: no initially polar documents")
    return 100.0 * (after_neutral - before.get("neutral", 0)) / polar


# -- end-to-end evaluation ----------------------------------------------------


@dataclass
class TopicReport:
    topic: str
    before: dict[str, int]
    after: dict[str, int]
    success: float | None

    @classmethod
    def from_labels(cls, topic: str, before: list[str], after: list[str]) -> "TopicReport":
        before_counts = {lab: before.count(lab) for lab in IDEOLOGIES}
        after_counts = {lab: after.count(lab) for lab in IDEOLOGIES}
        polar = before_counts["liberal"] + before_counts["conservative"]
        success = (
            100.0 * (after_counts["neutral"] - before_counts["neutral"]) / polar if polar else None
        )
        return cls(topic, before_counts, after_counts, success)


@dataclass
class EvalReport:
    rows: list[TopicReport]
    overall_success: float
    n_docs: int
    mean_bleu: float | None = None
    min_bleu: float | None = None
    polarity_reduced: int | None = None
    modified: int | None = None
    classifier_f1: float | None = None

    def table_rows(self) -> list[dict]:
        out = []
        for row in sorted(self.rows, key=lambda r: r.topic):
            out.append(
                {
                    "topic": row.topic,
                    "before_liberal": row.before["liberal"],
                    "before_neutral": row.before["neutral"],
                    "before_conservative": row.before["conservative"],
                    "after_neutral": row.after["neutral"],
                    "success_pct": round(row.success, 1) if row.success is not None else "",
                }
            )
        total_before = {lab: sum(r.before[lab] for r in self.rows) for lab in IDEOLOGIES}
        total_after_n = sum(r.after["neutral"] for r in self.rows)
        out.append(
            {
                "topic": "Overall",
                "before_liberal": total_before["liberal"],
                "before_neutral": total_before["neutral"],
                "before_conservative": total_before["conservative"],
                "after_neutral": total_after_n,
                "success_pct": round(self.overall_success, 1),
            }
        )
        return out


def report_from_counts(rows: list[dict]) -> EvalReport:
    """Build a report from aggregate counts (e.g. a published-table fixture).

    Row schema: {"topic", "before": {label: count}, "after_neutral": int}.
    """
    topic_rows = []
    total_before = {lab: 0 for lab in IDEOLOGIES}
    total_after_n = 0
    n_docs = 0
    for row in rows:
        before = {lab: int(row["before"].get(lab, 0)) for lab in IDEOLOGIES}
        after_n = int(row["after_neutral"])
        polar = before["liberal"] + before["conservative"]
        success = 100.0 * (after_n - before["neutral"]) / polar if polar else None
        after = {"liberal": 0, "neutral": after_n, "conservative": 0}
        topic_rows.append(TopicReport(row["topic"], before, after, success))
        for lab in IDEOLOGIES:
            total_before[lab] += before[lab]
        total_after_n += after_n
        n_docs += sum(before.values())
    overall = success_rate_from_counts(total_before, total_after_n)
    return EvalReport(topic_rows, overall, n_docs)


def evaluate_depolarization(
    articles: list[Article],
    depolarizer,
    classifier: IdeologyClassifier,
    anneal_config=None,
    seed_base: int = 0,
) -> EvalReport:
    """Rewrite every article, classify before and after, report per topic.

    Each document gets its own deterministic annealer seed derived from
    ``seed_base`` and its position, so reports are reproducible.
    """
    from dataclasses import replace as dc_replace

    from depolar.annealer import AnnealConfig
    from depolar.fluency import bleu as bleu_score

    base = anneal_config or AnnealConfig()
    by_topic: dict[str, tuple[list[str], list[str]]] = {}
    bleus = []
    reduced = 0
    modified = 0
    for i, article in enumerate(articles):
        before = classifier.classify(article.tokens)
        config = dc_replace(base, seed=seed_base + i)
        result = depolarizer.anneal(article.tokens, article.topic, article.ideology, config)
        after = classifier.classify(result.tokens)
        bleus.append(bleu_score(result.tokens, article.tokens))
        if result.tokens != article.tokens:
            modified += 1
            if result.polarity_after < result.polarity_before:
                reduced += 1
        by_topic.setdefault(article.topic, ([], []))
        by_topic[article.topic][0].append(before)
        by_topic[article.topic][1].append(after)

    rows = [
        TopicReport.from_labels(topic, before, after)
        for topic, (before, after) in sorted(by_topic.items())
    ]
    all_before = [lab for _, (b, _) in sorted(by_topic.items()) for lab in b]
    all_after = [lab for _, (_, a) in sorted(by_topic.items()) for lab in a]
    overall = success_rate(all_before, all_after)
    return EvalReport(
        rows,
        overall,
        n_docs=len(articles),
        mean_bleu=float(np.mean(bleus)) if bleus else None,
        min_bleu=float(np.min(bleus)) if bleus else None,
        polarity_reduced=reduced,
        modified=modified,
    )
