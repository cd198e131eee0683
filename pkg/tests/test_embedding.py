import numpy as np
import pytest

from depolar.corpus import Article, Vocabulary, build_vocab, make_corpus
from depolar.embedding import (
    AttributeModel,
    TrainConfig,
    _paragraph_examples,
    _train_phase,
    cbow_batch,
    cosine_distances,
    discrimination_accuracy,
    joint_train,
    objective_and_dense_grads,
    pretrain_option,
    train_model,
)
from depolar.errors import CorpusError, OutOfVocabularyError, UnknownOptionError
from depolar.salience import SalienceTable, build_banks


def art(doc_id, ideology, topic, text):
    return Article(id=doc_id, ideology=ideology, topic=topic, text=text)


def toy_model(main, ideo_shifts, topic_shifts, tokens=None):
    """Assemble a model from explicit small matrices (no training)."""
    main = np.asarray(main, dtype=np.float32)
    vocab_size, dims = main.shape
    tokens = tokens or ["<unk>"] + [f"w{i}" for i in range(1, vocab_size)]
    attrs = [("ideology", ("liberal", "neutral", "conservative")), ("topic", tuple(topic_shifts))]
    vocab = Vocabulary(tokens, np.full(vocab_size, 10, dtype=np.int64), {}, attrs)
    shifts = {
        "ideology": {k: np.asarray(v, dtype=np.float32) for k, v in ideo_shifts.items()},
        "topic": {k: np.asarray(v, dtype=np.float32) for k, v in topic_shifts.items()},
    }
    config = TrainConfig(dims=dims, negatives=1, window=1, epochs=1)
    return AttributeModel(vocab, config, main, shifts, np.zeros_like(main))


class TestCompose:
    def model(self):
        zeros = np.zeros((3, 2))
        main = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.5]])
        ideo = {
            "liberal": np.array([[0, 0], [0, 1], [0, 0]], dtype=float),
            "neutral": zeros,
            "conservative": zeros + 0.25,
        }
        topic = {"t1": np.array([[0, 0], [1, 1], [0, 0]], dtype=float), "t2": zeros}
        return toy_model(main, ideo, topic)

    def test_zero_shifts_identity(self):
        model = self.model()
        assert np.allclose(model.compose("w1", "neutral", "t2"), [1.0, 0.0])

    def test_additive_example(self):
        model = self.model()
        assert np.allclose(model.compose("w1", "liberal", "t1"), [2.0, 2.0])

    def test_topic_change_is_shift_difference(self):
        model = self.model()
        diff = model.compose("w1", "liberal", "t1") - model.compose("w1", "liberal", "t2")
        expected = model.shift("topic", "t1")[1] - model.shift("topic", "t2")[1]
        assert np.allclose(diff, expected)

    def test_exact_additivity_random(self):
        rng = np.random.default_rng(5)
        main = rng.standard_normal((6, 4))
        ideo = {k: rng.standard_normal((6, 4)) for k in ("liberal", "neutral", "conservative")}
        topic = {k: rng.standard_normal((6, 4)) for k in ("a", "b")}
        model = toy_model(main, ideo, topic)
        for _ in range(100):
            wid = int(rng.integers(1, 6))
            i = ["liberal", "neutral", "conservative"][rng.integers(0, 3)]
            t = ["a", "b"][rng.integers(0, 2)]
            word = model.vocab.tokens[wid]
            got = model.compose(word, i, t)
            want = model.main[wid] + model.shift("ideology", i)[wid] + model.shift("topic", t)[wid]
            assert np.array_equal(got, want)

    def test_unknown_word_and_option(self):
        model = self.model()
        with pytest.raises(OutOfVocabularyError):
            model.compose("nope", "liberal", "t1")
        with pytest.raises(UnknownOptionError):
            model.compose("w1", "left", "t1")
        with pytest.raises(UnknownOptionError):
            model.compose("w1", "liberal", "nope")


class TestGradients:
    def setup_case(self, seed, n_shifts=2, l2=0.01):
        rng = np.random.default_rng(seed)
        vocab_size, dims = 9, 4
        main = rng.standard_normal((vocab_size, dims))
        shifts = [rng.standard_normal((vocab_size, dims)) for _ in range(n_shifts)]
        context = rng.standard_normal((vocab_size, dims))
        centers = rng.integers(1, vocab_size, size=3).astype(np.int32)
        ctx = rng.integers(1, vocab_size, size=(3, 4)).astype(np.int32)
        ctx[0, 3] = -1  # exercise padding
        negs = rng.integers(1, vocab_size, size=(3, 5))
        return main, shifts, context, centers, ctx, negs, l2

    def objective(self, mats, case):
        main, shifts, context = mats
        _, _, _, centers, ctx, negs, l2 = case
        res = cbow_batch(main, shifts, context, centers, ctx, negs, l2)
        return res["objective"]

    @pytest.mark.parametrize("seed", [0, 1])
    @pytest.mark.parametrize("l2", [0.0, 0.05])
    def test_matches_finite_differences(self, seed, l2):
        case = self.setup_case(seed, l2=l2)
        main, shifts, context, centers, ctx, negs, _ = case
        case = (main, shifts, context, centers, ctx, negs, l2)
        obj, d_main, d_shifts, d_context = objective_and_dense_grads(
            main, shifts, context, centers, ctx, negs, l2
        )
        step = 1e-6
        params = [("main", main, d_main), ("context", context, d_context)] + [
            (f"shift{i}", shifts[i], d_shifts[i]) for i in range(len(shifts))
        ]
        for name, mat, grad in params:
            fd = np.zeros_like(mat)
            for pos in np.ndindex(mat.shape):
                orig = mat[pos]
                mat[pos] = orig + step
                up = self.objective((main, shifts, context), case)
                mat[pos] = orig - step
                down = self.objective((main, shifts, context), case)
                mat[pos] = orig
                fd[pos] = (up - down) / (2 * step)
            denom = np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1e-6)
            rel = np.abs(grad - fd) / denom
            assert rel.max() < 1e-4, f"{name}: max rel err {rel.max()}"


class _FixedSampler:
    def __init__(self, negs):
        self.negs = negs

    def draw(self, rng, shape):
        assert shape == self.negs.shape
        return self.negs


class TestTrainerParity:
    def test_single_batch_update_matches_reference(self):
        rng = np.random.default_rng(3)
        vocab_size, dims, lr, l2 = 8, 6, 0.1, 0.02
        main = rng.standard_normal((vocab_size, dims)).astype(np.float32)
        sh1 = rng.standard_normal((vocab_size, dims)).astype(np.float32)
        context = rng.standard_normal((vocab_size, dims)).astype(np.float32)
        centers = rng.integers(1, vocab_size, size=5).astype(np.int32)
        ctx = rng.integers(1, vocab_size, size=(5, 4)).astype(np.int32)
        ctx[1, 0] = -1
        negs = rng.integers(1, vocab_size, size=(5, 3))

        _, d_main, d_shifts, d_context = objective_and_dense_grads(
            main.copy(), [sh1.copy()], context.copy(), centers, ctx, negs, l2
        )
        want_main = main + lr * d_main
        want_sh1 = sh1 + lr * d_shifts[0]
        want_context = context + lr * d_context

        got_main, got_sh1, got_context = main.copy(), sh1.copy(), context.copy()
        config = TrainConfig(
            dims=dims, negatives=3, window=2, epochs=1, l2=l2,
            lr_start=lr, lr_min=lr, batch_size=64, seed=0,
        )
        groups = [([got_sh1], (centers, ctx), _FixedSampler(negs))]
        _train_phase(got_main, got_context, groups, config, np.random.default_rng(0))

        assert np.allclose(got_main, want_main, atol=1e-5)
        assert np.allclose(got_sh1, want_sh1, atol=1e-5)
        assert np.allclose(got_context, want_context, atol=1e-5)


class TestExamples:
    def test_window_width(self):
        ids = np.arange(1, 11, dtype=np.int32)
        centers, ctx = _paragraph_examples(ids, [(0, 10)], window=3, unk_id=0)
        assert ctx.shape[1] == 6
        valid = (ctx >= 0).sum(axis=1)
        assert valid.max() == 6
        assert valid.min() == 3  # edges keep window truncated
        assert len(centers) == 10

    def test_unk_centers_skipped(self):
        ids = np.array([1, 0, 2], dtype=np.int32)
        centers, ctx = _paragraph_examples(ids, [(0, 3)], window=2, unk_id=0)
        assert 0 not in centers
        assert 0 in ctx  # UNK still visible as context

    def test_no_cross_paragraph_context(self):
        ids = np.array([1, 2, 3, 4], dtype=np.int32)
        _, ctx = _paragraph_examples(ids, [(0, 2), (2, 4)], window=3, unk_id=0)
        assert set(ctx[0][ctx[0] >= 0].tolist()) == {2}
        assert set(ctx[2][ctx[2] >= 0].tolist()) == {4}


def small_corpus():
    rng = np.random.default_rng(0)
    pool = [f"w{i}" for i in range(12)]
    docs = []
    for i in range(12):
        ideology = ["liberal", "neutral", "conservative"][i % 3]
        topic = ["t1", "t2"][i % 2]
        text = " ".join(rng.choice(pool, size=30))
        docs.append(art(str(i), ideology, topic, text))
    return make_corpus(docs)


class TestTraining:
    def test_pretrain_shape_default_dims(self):
        corpus = small_corpus()
        vocab = build_vocab(corpus, min_count=1)
        config = TrainConfig(epochs=1)
        matrix, _ = pretrain_option(corpus, vocab, "ideology", "liberal", config)
        assert matrix.shape == (len(vocab), 256)

    def test_pretrain_empty_subcorpus_names_option(self):
        corpus = make_corpus([art("1", "liberal", "t1", "a b c d e")])
        vocab = build_vocab(corpus, min_count=1)
        with pytest.raises(CorpusError, match="neutral"):
            pretrain_option(corpus, vocab, "ideology", "neutral", TrainConfig(dims=8))

    def test_loss_decreases_on_repeated_sentence(self):
        corpus = make_corpus([art("1", "neutral", "t1", "the quick brown fox jumps high")])
        vocab = build_vocab(corpus, min_count=1)
        config = TrainConfig(dims=16, epochs=3, negatives=4)
        _, losses = pretrain_option(corpus, vocab, "ideology", "neutral", config)
        assert losses[0] > losses[1] > losses[2]

    def test_joint_missing_bank_errors(self):
        corpus = small_corpus()
        vocab = build_vocab(corpus, min_count=1)
        config = TrainConfig(dims=8, epochs=1)
        pretrained = {}
        for attribute, options in vocab.attributes:
            for option in options:
                pretrained[(attribute, option)], _ = pretrain_option(corpus, vocab, attribute, option, config)
        from depolar.errors import DepolarError

        with pytest.raises(DepolarError, match="bank"):
            joint_train(corpus, vocab, pretrained, {}, config)

    def test_train_model_deterministic(self):
        corpus = small_corpus()
        config = TrainConfig(dims=12, epochs=2, negatives=4, seed=42)
        m1 = train_model(corpus, config, min_count=1)
        m2 = train_model(corpus, config, min_count=1)
        assert np.array_equal(m1.main, m2.main)
        assert np.array_equal(m1.context, m2.context)
        for attribute, options in m1.vocab.attributes:
            for option in options:
                assert np.array_equal(m1.shifts[attribute][option], m2.shifts[attribute][option])

    def test_discrimination_accuracy_in_range(self):
        corpus = small_corpus()
        model = train_model(corpus, TrainConfig(dims=12, epochs=2, negatives=4), min_count=1)
        acc = discrimination_accuracy(model, corpus, seed=0)
        assert 0.0 <= acc <= 1.0


class TestPersistence:
    def read_dir(self, path):
        return {p.name: p.read_bytes() for p in sorted(path.iterdir())}

    def test_roundtrip_bytes(self, tmp_path):
        corpus = small_corpus()
        model = train_model(corpus, TrainConfig(dims=8, epochs=1, negatives=2), min_count=1)
        first = tmp_path / "m1"
        second = tmp_path / "m2"
        model.save(str(first))
        loaded = AttributeModel.load(str(first))
        loaded.save(str(second))
        assert self.read_dir(first) == self.read_dir(second)

    def test_loaded_model_composes_identically(self, tmp_path):
        corpus = small_corpus()
        model = train_model(corpus, TrainConfig(dims=8, epochs=1, negatives=2), min_count=1)
        model.save(str(tmp_path / "m"))
        loaded = AttributeModel.load(str(tmp_path / "m"))
        word = model.vocab.tokens[1]
        assert np.array_equal(
            model.compose(word, "liberal", "t1"), loaded.compose(word, "liberal", "t1")
        )

    def test_corrupt_matrix_length(self, tmp_path):
        corpus = small_corpus()
        model = train_model(corpus, TrainConfig(dims=8, epochs=1, negatives=2), min_count=1)
        model.save(str(tmp_path / "m"))
        (tmp_path / "m" / "main.f32").write_bytes(b"\x00" * 7)
        from depolar.errors import DepolarError

        with pytest.raises(DepolarError, match="bytes"):
            AttributeModel.load(str(tmp_path / "m"))


class TestNearestNeighbors:
    def dup_model(self):
        main = np.array([[0, 0], [1.0, 0], [1.0, 0], [0, 1.0], [0.5, 0.5]], dtype=np.float32)
        zeros = np.zeros_like(main)
        ideo = {k: zeros for k in ("liberal", "neutral", "conservative")}
        topic = {"t": zeros}
        return toy_model(main, ideo, topic, tokens=["<unk>", "bb", "aa", "cc", "dd"])

    def test_k_zero_empty(self):
        assert self.dup_model().nearest_neighbors("aa", "neutral", "t", 0) == []

    def test_duplicate_vectors_tie_break(self):
        model = self.dup_model()
        # dd duplicates nothing; aa and bb are identical vectors
        got = model.nearest_neighbors("cc", "neutral", "t", 4)
        words = [w for w, _ in got]
        assert set(words) == {"aa", "bb", "dd"}
        # aa and bb tie at the same distance; lexicographic order puts aa first
        d = dict(got)
        assert d["aa"] == d["bb"]
        assert words.index("aa") < words.index("bb")

    def test_excludes_self_and_unk(self):
        model = self.dup_model()
        got = model.nearest_neighbors("aa", "neutral", "t", 10)
        words = [w for w, _ in got]
        assert "aa" not in words and "<unk>" not in words

    def test_cosine_distance_zero_vectors(self):
        m = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert cosine_distances(m, np.zeros(2))[0] == 0.0
        assert cosine_distances(m, np.zeros(2))[1] == 1.0
        assert cosine_distances(m, np.array([1.0, 0.0]))[0] == 1.0
