"""Attribute-aware CBOW embeddings with negative sampling.

A word's vector is the sum of one attribute-invariant "main" row and one
shift row per attribute (ideology, topic). Training runs in two steps:
per-option pretraining of the shift matrices on that option's documents,
then joint training of main + shifts on the full corpus with negatives
drawn from the per-option reversed salience banks.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from depolar.corpus import Corpus, Vocabulary
from depolar.errors import CorpusError, DepolarError, UnknownOptionError
from depolar.salience import ReversedBank

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    dims: int = 256
    negatives: int = 32
    window: int = 3
    epochs: int = 5
    l2: float = 1e-8
    lr_start: float = 0.05
    lr_min: float = 1e-4
    # batches aggregate gradients at stale parameters, so oversized batches
    # overshoot on frequent rows and diverge; 128 is stable at desk scale
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dims <= 0 or self.negatives <= 0 or self.window <= 0:
            raise ValueError("dims, negatives and window must all be positive")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def cbow_batch(
    main: np.ndarray,
    active_shifts: list[np.ndarray],
    context_mat: np.ndarray,
    centers: np.ndarray,
    ctx_ids: np.ndarray,
    negs: np.ndarray,
    l2: float,
) -> dict:
    """Objective value and gradient pieces for one CBOW batch.

    The per-pair objective is log sigma(C[w]·h) + sum_j log sigma(-C[n_j]·h)
    minus an L2 penalty on each fused context vector, where h is the mean of
    the fused (main + active shifts) context rows. ``ctx_ids`` is padded
    with -1. Returns the pieces needed for both dense gradient assembly and
    the aggregated sparse updates used in training.
    """
    mask = ctx_ids >= 0
    safe = np.where(mask, ctx_ids, 0)
    x = main[safe]
    for sh in active_shifts:
        x = x + sh[safe]
    x = x * mask[..., None]
    n_ctx = mask.sum(axis=1)
    h = x.sum(axis=1) / n_ctx[:, None]

    u_pos = np.einsum("bd,bd->b", context_mat[centers], h)
    c_neg = context_mat[negs]
    u_neg = np.einsum("bnd,bd->bn", c_neg, h)

    objective = float(_log_sigmoid(u_pos).sum() + _log_sigmoid(-u_neg).sum())
    objective -= l2 * float(np.einsum("bwd,bwd->", x, x))

    g_pos = 1.0 - _sigmoid(u_pos)
    g_neg = -_sigmoid(u_neg)
    grad_h = g_pos[:, None] * context_mat[centers] + np.einsum("bn,bnd->bd", g_neg, c_neg)
    return {
        "objective": objective,
        "mask": mask,
        "x": x,
        "h": h,
        "n_ctx": n_ctx,
        "g_pos": g_pos,
        "g_neg": g_neg,
        "grad_h": grad_h,
    }


def objective_and_dense_grads(
    main: np.ndarray,
    active_shifts: list[np.ndarray],
    context_mat: np.ndarray,
    centers: np.ndarray,
    ctx_ids: np.ndarray,
    negs: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, list[np.ndarray], np.ndarray]:
    """Reference gradients of the batch objective w.r.t. every matrix.

    Used by the finite-difference check and small-scale tests; training uses
    the aggregated sparse form of the same math.
    """
    res = cbow_batch(main, active_shifts, context_mat, centers, ctx_ids, negs, l2)
    mask, x, h = res["mask"], res["x"], res["h"]
    g_x = res["grad_h"][:, None, :] / res["n_ctx"][:, None, None] - 2.0 * l2 * x
    g_x = g_x * mask[..., None]

    d_main = np.zeros_like(main)
    flat_ids = ctx_ids[mask]
    flat_g = g_x[mask]
    np.add.at(d_main, flat_ids, flat_g)
    d_shifts = [d_main.copy() for _ in active_shifts]

    d_context = np.zeros_like(context_mat)
    np.add.at(d_context, centers, res["g_pos"][:, None] * h)
    np.add.at(d_context, negs.ravel(), (res["g_neg"][..., None] * h[:, None, :]).reshape(-1, h.shape[1]))
    return res["objective"], d_main, d_shifts, d_context


class _UniformNegatives:
    """Uniform draws over real words (UNK excluded); used in pretraining."""

    def __init__(self, vocab_size: int):
        self.vocab_size = vocab_size

    def draw(self, rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
        return rng.integers(1, self.vocab_size, size=shape, dtype=np.int64)


class _BankNegatives:
    """Each negative comes from the bank of a uniformly chosen active option."""

    def __init__(self, banks: list[ReversedBank]):
        self.banks = banks

    def draw(self, rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
        which = rng.integers(0, len(self.banks), size=shape)
        uniforms = rng.random(shape)
        out = np.empty(shape, dtype=np.int64)
        for i, bank in enumerate(self.banks):
            sel = which == i
            if sel.any():
                out[sel] = bank.sample_from_uniforms(uniforms[sel])
        return out


def _paragraph_examples(ids: np.ndarray, spans: list[tuple[int, int]], window: int, unk_id: int):
    """(centers, contexts) arrays for one document; contexts padded with -1.

    Windows never cross paragraph boundaries; UNK tokens are skipped as
    centers but kept as context; centers without any context are dropped.
    """
    width = 2 * window
    all_centers = []
    all_ctx = []
    for start, end in spans:
        m = end - start
        if m < 2:
            continue
        para = ids[start:end]
        ctx = np.full((m, width), -1, dtype=np.int32)
        col = 0
        for off in range(-window, window + 1):
            if off == 0:
                continue
            lo = max(0, -off)
            hi = min(m, m - off)
            if lo < hi:
                ctx[lo:hi, col] = para[lo + off : hi + off]
            col += 1
        keep = (para != unk_id) & (ctx >= 0).any(axis=1)
        if keep.any():
            all_centers.append(para[keep].astype(np.int32))
            all_ctx.append(ctx[keep])
    if not all_centers:
        return np.empty(0, dtype=np.int32), np.empty((0, width), dtype=np.int32)
    return np.concatenate(all_centers), np.concatenate(all_ctx)


def _group_examples(corpus: Corpus, vocab: Vocabulary, window: int, key_fn):
    """Concatenate training examples for all documents sharing a group key."""
    groups: dict = {}
    for art in corpus.articles:
        key = key_fn(art)
        if key is None:
            continue
        ids = vocab.encode(art.tokens)
        centers, ctx = _paragraph_examples(ids, art.paragraphs, window, vocab.unk_id)
        if len(centers) == 0:
            continue
        groups.setdefault(key, [[], []])
        groups[key][0].append(centers)
        groups[key][1].append(ctx)
    return {
        key: (np.concatenate(parts[0]), np.concatenate(parts[1]))
        for key, parts in sorted(groups.items())
    }


def _train_phase(
    main: np.ndarray,
    context_mat: np.ndarray,
    groups: list[tuple[list[np.ndarray], tuple[np.ndarray, np.ndarray], object]],
    config: TrainConfig,
    rng: np.random.Generator,
) -> list[float]:
    """SGD over grouped examples; mutates the given matrices in place.

    Each group carries its active shift matrices and negative sampler.
    Returns the mean per-example objective (sign-flipped to a loss) per epoch.
    """
    vocab_size = main.shape[0]
    total = sum(len(centers) for _, (centers, _), _ in groups) * config.epochs
    if total == 0:
        raise CorpusError("no training examples (documents too short?)")
    schedule = [
        (gi, lo)
        for gi, (_, (centers, _), _) in enumerate(groups)
        for lo in range(0, len(centers), config.batch_size)
    ]
    consumed = 0
    losses = []
    for _ in range(config.epochs):
        epoch_obj = 0.0
        epoch_n = 0
        for gi, lo in schedule:
            active_shifts, (centers, ctx), sampler = groups[gi]
            b_centers = centers[lo : lo + config.batch_size]
            b_ctx = ctx[lo : lo + config.batch_size]
            bsz = len(b_centers)
            negs = sampler.draw(rng, (bsz, config.negatives))
            lr = config.lr_start - (config.lr_start - config.lr_min) * (consumed / total)
            lr = max(lr, config.lr_min)
            consumed += bsz

            res = cbow_batch(main, active_shifts, context_mat, b_centers, b_ctx, negs, config.l2)
            epoch_obj += res["objective"]
            epoch_n += bsz

            mask = res["mask"]
            batch_ids = np.arange(bsz)

            # fused context-side update: the same gradient lands on main and
            # every active shift
            slot_rows = b_ctx[mask].astype(np.int64)
            slot_cols = np.broadcast_to(batch_ids[:, None], mask.shape)[mask]
            slot_data = np.broadcast_to((1.0 / res["n_ctx"])[:, None], mask.shape)[mask]
            s_ctx = sparse.csr_matrix((slot_data, (slot_rows, slot_cols)), shape=(vocab_size, bsz))
            upd = s_ctx @ res["grad_h"]
            occ = np.bincount(slot_rows, minlength=vocab_size).astype(main.dtype)
            touched = np.flatnonzero(occ)
            fused = main[touched].copy()
            for sh in active_shifts:
                fused += sh[touched]
            delta = lr * (upd[touched] - 2.0 * config.l2 * occ[touched, None] * fused)
            main[touched] += delta
            for sh in active_shifts:
                sh[touched] += delta

            # output-side update for the positive and negative targets
            out_rows = np.concatenate([b_centers.astype(np.int64), negs.ravel()])
            out_cols = np.concatenate([batch_ids, np.repeat(batch_ids, config.negatives)])
            out_data = np.concatenate([res["g_pos"], res["g_neg"].ravel()])
            s_out = sparse.csr_matrix((out_data, (out_rows, out_cols)), shape=(vocab_size, bsz))
            context_mat += lr * (s_out @ res["h"])
        losses.append(-epoch_obj / epoch_n)
    return losses


def _uniform_init(rng: np.random.Generator, vocab_size: int, dims: int) -> np.ndarray:
    return ((rng.random((vocab_size, dims)) - 0.5) / dims).astype(np.float32)


def pretrain_option(
    corpus: Corpus,
    vocab: Vocabulary,
    attribute: str,
    option: str,
    config: TrainConfig,
) -> tuple[np.ndarray, list[float]]:
    """Standard CBOW embeddings trained only on documents carrying the option.

    Negative sampling is uniform here; the salience banks apply only in the
    joint phase. Returns the trained input matrix and per-epoch losses.
    """
    articles = corpus.subset(attribute, option)
    if not articles:
        raise CorpusError(f"empty sub-corpus for {attribute} option {option!r}")
    sub = Corpus(articles, corpus.topics)
    groups_raw = _group_examples(sub, vocab, config.window, lambda art: 0)
    # Every option pretrains from the SAME init (and rng stream): differences
    # between per-option matrices then reflect usage, not initialization
    # noise, which is what makes them meaningful as shift seeds.
    rng = np.random.default_rng([config.seed, 1])
    matrix = _uniform_init(rng, len(vocab), config.dims)
    context_mat = np.zeros((len(vocab), config.dims), dtype=np.float32)
    sampler = _UniformNegatives(len(vocab))
    groups = [([], examples, sampler) for examples in groups_raw.values()]
    losses = _train_phase(matrix, context_mat, groups, config, rng)
    return matrix, losses


def joint_train(
    corpus: Corpus,
    vocab: Vocabulary,
    pretrained: dict[tuple[str, str], np.ndarray],
    banks: dict[tuple[str, str], ReversedBank],
    config: TrainConfig,
) -> "AttributeModel":
    """Train main + shift matrices jointly with attribute-aware negatives.

    Shift matrices start from the pretrained per-option matrices; the main
    matrix starts uniform. Negatives for a document come from the banks of
    its two active options.
    """
    shifts: dict[str, dict[str, np.ndarray]] = {}
    for attribute, options in vocab.attributes:
        shifts[attribute] = {}
        for option in options:
            key = (attribute, option)
            if key not in pretrained:
                raise DepolarError(f"missing pretrained matrix for {key}")
            mat = np.ascontiguousarray(pretrained[key], dtype=np.float32)
            if mat.shape != (len(vocab), config.dims):
                raise DepolarError(f"pretrained matrix for {key} has shape {mat.shape}")
            shifts[attribute][option] = mat.copy()

    active_cells = sorted({(art.ideology, art.topic) for art in corpus.articles})
    for ideology, topic in active_cells:
        for key in (("ideology", ideology), ("topic", topic)):
            if key not in banks:
                raise DepolarError(f"missing negative-sampling bank for {key}")

    rng = np.random.default_rng([config.seed, 0])
    main = _uniform_init(rng, len(vocab), config.dims)
    context_mat = np.zeros((len(vocab), config.dims), dtype=np.float32)

    grouped = _group_examples(corpus, vocab, config.window, lambda art: (art.ideology, art.topic))
    groups = []
    for (ideology, topic), examples in grouped.items():
        active = [shifts["ideology"][ideology], shifts["topic"][topic]]
        sampler = _BankNegatives([banks[("ideology", ideology)], banks[("topic", topic)]])
        groups.append((active, examples, sampler))

    losses = _train_phase(main, context_mat, groups, config, rng)
    return AttributeModel(vocab, config, main, shifts, context_mat, joint_losses=losses)


class AttributeModel:
    """Trained embedding matrices plus the vocabulary they index."""

    def __init__(
        self,
        vocab: Vocabulary,
        config: TrainConfig,
        main: np.ndarray,
        shifts: dict[str, dict[str, np.ndarray]],
        context_mat: np.ndarray,
        joint_losses: list[float] | None = None,
    ):
        self.vocab = vocab
        self.config = config
        self.main = main
        self.shifts = shifts
        self.context = context_mat
        self.joint_losses = joint_losses or []
        self.dims = main.shape[1]

    @property
    def attributes(self) -> list[tuple[str, tuple[str, ...]]]:
        return self.vocab.attributes

    def shift(self, attribute: str, option: str) -> np.ndarray:
        try:
            per_attr = self.shifts[attribute]
        except KeyError:
            raise UnknownOptionError(f"unknown attribute {attribute!r}") from None
        if option not in per_attr:
            raise UnknownOptionError(f"unknown option {option!r} for attribute {attribute!r}")
        return per_attr[option]

    def compose(self, word: str, ideology: str, topic: str) -> np.ndarray:
        """Fused vector: main row + ideology shift row + topic shift row."""
        wid = self.vocab.id(word)
        return (
            self.main[wid]
            + self.shift("ideology", ideology)[wid]
            + self.shift("topic", topic)[wid]
        )

    def compose_matrix(self, ideology: str, topic: str) -> np.ndarray:
        """Fused vectors for the whole vocabulary under one (ideology, topic)."""
        return self.main + self.shift("ideology", ideology) + self.shift("topic", topic)

    def nearest_neighbors(self, word: str, ideology: str, topic: str, k: int) -> list[tuple[str, float]]:
        """k nearest words by cosine distance between fused vectors.

        The query word and UNK are excluded; ties break lexicographically.
        """
        wid = self.vocab.id(word)
        if k <= 0:
            return []
        matrix = self.compose_matrix(ideology, topic).astype(np.float64)
        dists = cosine_distances(matrix, matrix[wid])
        order = sorted(
            (i for i in range(1, len(self.vocab)) if i != wid),
            key=lambda i: (dists[i], self.vocab.tokens[i]),
        )
        return [(self.vocab.tokens[i], float(dists[i])) for i in order[:k]]

    # -- persistence ------------------------------------------------------

    def save(self, model_dir: str) -> None:
        """Write manifest, vocab and raw float32 matrices; fully deterministic."""
        path = Path(model_dir)
        path.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format_version": FORMAT_VERSION,
            "dims": int(self.dims),
            "vocab_size": len(self.vocab),
            "attributes": [
                {"name": name, "options": list(options)} for name, options in self.vocab.attributes
            ],
            "config": asdict(self.config),
        }
        (path / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        vocab_lines = [f"{tok}\t{int(c)}" for tok, c in zip(self.vocab.tokens, self.vocab.counts)]
        (path / "vocab.tsv").write_text("\n".join(vocab_lines) + "\n", encoding="utf-8")
        self._matrix_path(path, "main").write_bytes(_matrix_bytes(self.main))
        self._matrix_path(path, "context").write_bytes(_matrix_bytes(self.context))
        for attribute, options in self.vocab.attributes:
            for i, option in enumerate(options):
                name = f"shift__{attribute}__{i:03d}"
                self._matrix_path(path, name).write_bytes(_matrix_bytes(self.shifts[attribute][option]))

    @staticmethod
    def _matrix_path(path: Path, name: str) -> Path:
        return path / f"{name}.f32"

    @classmethod
    def load(cls, model_dir: str) -> "AttributeModel":
        path = Path(model_dir)
        manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
        if manifest.get("format_version") != FORMAT_VERSION:
            raise DepolarError(f"unsupported model format: {manifest.get('format_version')}")
        dims = manifest["dims"]
        vocab_size = manifest["vocab_size"]
        attributes = [(a["name"], tuple(a["options"])) for a in manifest["attributes"]]

        tokens = []
        counts = []
        for line in (path / "vocab.tsv").read_text(encoding="utf-8").splitlines():
            tok, _, count = line.rpartition("\t")
            tokens.append(tok)
            counts.append(int(count))
        if len(tokens) != vocab_size:
            raise DepolarError(f"vocab has {len(tokens)} entries, manifest says {vocab_size}")
        vocab = Vocabulary(tokens, np.array(counts, dtype=np.int64), {}, attributes)

        def read_matrix(name):
            raw = cls._matrix_path(path, name).read_bytes()
            expected = vocab_size * dims * 4
            if len(raw) != expected:
                raise DepolarError(f"{name}: expected {expected} bytes, found {len(raw)}")
            return np.frombuffer(raw, dtype="<f4").reshape(vocab_size, dims).copy()

        shifts: dict[str, dict[str, np.ndarray]] = {}
        for attribute, options in attributes:
            shifts[attribute] = {
                option: read_matrix(f"shift__{attribute}__{i:03d}") for i, option in enumerate(options)
            }
        config = TrainConfig(**manifest["config"])
        return cls(vocab, config, read_matrix("main"), shifts, read_matrix("context"))


def _matrix_bytes(matrix: np.ndarray) -> bytes:
    return np.ascontiguousarray(matrix, dtype="<f4").tobytes()


def cosine_distances(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """1 - cosine similarity of each row vs the query; zero vectors handled.

    Two zero vectors count as identical (distance 0); a single zero vector
    is maximally unrelated (distance 1).
    """
    norms = np.linalg.norm(matrix, axis=1)
    q_norm = np.linalg.norm(query)
    sims = np.zeros(len(matrix), dtype=np.float64)
    if q_norm == 0:
        sims[norms == 0] = 1.0
    else:
        ok = norms > 0
        sims[ok] = (matrix[ok] @ query) / (norms[ok] * q_norm)
    return 1.0 - sims


def train_model(
    corpus: Corpus,
    config: TrainConfig | None = None,
    min_count: int = 5,
    pmi_threshold: float = 3.0,
    min_pair_count: int = 10,
    detect_phrases_pass: bool = True,
) -> AttributeModel:
    """Full pipeline: phrases, vocabulary, salience banks, pretrain, joint."""
    from depolar.corpus import apply_phrases, build_vocab, detect_phrases
    from depolar.salience import SalienceTable, build_banks

    config = config or TrainConfig()
    if detect_phrases_pass:
        table = detect_phrases(corpus, pmi_threshold, min_pair_count)
        corpus = apply_phrases(corpus, table)
    vocab = build_vocab(corpus, min_count=min_count)
    banks = build_banks(SalienceTable(vocab))
    pretrained = {}
    for attribute, options in vocab.attributes:
        for option in options:
            matrix, _ = pretrain_option(corpus, vocab, attribute, option, config)
            pretrained[(attribute, option)] = matrix
    return joint_train(corpus, vocab, pretrained, banks, config)


def discrimination_accuracy(
    model: AttributeModel,
    corpus: Corpus,
    seed: int = 0,
    max_examples: int = 20000,
) -> float:
    """Fraction of (positive, uniform negative) target pairs the model ranks
    correctly; the informal training-quality number reported after training."""
    rng = np.random.default_rng(seed)
    grouped = _group_examples(corpus, model.vocab, model.config.window, lambda a: (a.ideology, a.topic))
    correct = 0
    total = 0
    for (ideology, topic), (centers, ctx) in grouped.items():
        if total >= max_examples:
            break
        take = min(len(centers), max_examples - total)
        sel = rng.choice(len(centers), size=take, replace=False) if take < len(centers) else np.arange(take)
        fused = model.compose_matrix(ideology, topic)
        mask = ctx[sel] >= 0
        safe = np.where(mask, ctx[sel], 0)
        x = fused[safe] * mask[..., None]
        h = x.sum(axis=1) / mask.sum(axis=1)[:, None]
        negs = rng.integers(1, len(model.vocab), size=take)
        u_pos = np.einsum("bd,bd->b", model.context[centers[sel]], h)
        u_neg = np.einsum("bd,bd->b", model.context[negs], h)
        correct += int((u_pos > u_neg).sum())
        total += take
    return correct / total if total else 0.0
