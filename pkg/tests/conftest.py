import json
from types import SimpleNamespace

import pytest

from depolar.embedding import TrainConfig, train_model
from depolar.evalkit import SynthSpec, write_synth
from depolar.runtime import Pipeline


@pytest.fixture(scope="session")
def small_bundle(tmp_path_factory):
    """A tiny trained pipeline shared by CLI/service tests.

    Quality does not matter here, only having a real model directory with
    topics, candidates and a polarity index.
    """
    root = tmp_path_factory.mktemp("small_bundle")
    spec = SynthSpec(
        docs_per_cell=6,
        tokens_per_doc=60,
        background_size=80,
        context_block_size=8,
        seed=5,
    )
    corpus_path = root / "corpus.jsonl"
    truth_path = root / "truth.json"
    corpus, truth = write_synth(spec, str(corpus_path), str(truth_path))
    config = TrainConfig(dims=16, epochs=2, negatives=4, batch_size=64, seed=5)
    model = train_model(corpus, config, min_count=2)
    model_dir = root / "model"
    model.save(str(model_dir))
    pipeline = Pipeline.load(str(model_dir), min_freq=2)

    polar_doc = next(a for a in corpus.articles if a.ideology == "liberal")
    return SimpleNamespace(
        spec=spec,
        corpus=corpus,
        truth=truth,
        corpus_path=str(corpus_path),
        truth_path=str(truth_path),
        model_dir=str(model_dir),
        pipeline=pipeline,
        polar_doc=polar_doc,
        min_freq=2,
    )


@pytest.fixture()
def table3_path():
    from pathlib import Path

    return str(Path(__file__).parent / "data" / "table3_counts.json")
