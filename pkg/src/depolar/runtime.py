"""Loads a trained model directory into the objects the CLI and HTTP
service operate on, and normalizes inference-time text the same way the
training pipeline did."""

from __future__ import annotations

from dataclasses import dataclass

from depolar.annealer import AnnealConfig, Depolarizer
from depolar.candidates import CandidateRetriever
from depolar.corpus import Vocabulary, tokenize_paragraphs
from depolar.embedding import AttributeModel
from depolar.errors import UnknownOptionError
from depolar.polarity import DESK_MIN_FREQ, PolarityIndex


def merge_by_vocab(tokens: list[str], vocab: Vocabulary) -> list[str]:
    """Greedy left-to-right merge of any adjacent pair whose joined form is a
    vocabulary token.

    Phrase pairs merged during training survive only as ``a_b`` vocabulary
    entries, so at inference time the vocabulary itself is the phrase table.
    """
    out: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        if i + 1 < n and tokens[i] + "_" + tokens[i + 1] in vocab:
            out.append(tokens[i] + "_" + tokens[i + 1])
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


@dataclass
class Pipeline:
    """Immutable bundle of model, polarity index and retriever."""

    model: AttributeModel
    index: PolarityIndex
    retriever: CandidateRetriever
    depolarizer: Depolarizer

    @classmethod
    def load(cls, model_dir: str, min_freq: int = DESK_MIN_FREQ) -> "Pipeline":
        model = AttributeModel.load(model_dir)
        index = PolarityIndex(model, min_freq=min_freq)
        retriever = CandidateRetriever(model)
        return cls(model, index, retriever, Depolarizer(index, retriever))

    @classmethod
    def from_model(cls, model: AttributeModel, min_freq: int = DESK_MIN_FREQ) -> "Pipeline":
        index = PolarityIndex(model, min_freq=min_freq)
        retriever = CandidateRetriever(model)
        return cls(model, index, retriever, Depolarizer(index, retriever))

    @property
    def topics(self) -> tuple[str, ...]:
        return self.model.vocab.options("topic")

    def check_topic(self, topic: str) -> None:
        if topic not in self.topics:
            raise UnknownOptionError(f"unknown topic {topic!r}")

    def check_ideology(self, ideology: str, polar_only: bool = False) -> None:
        allowed = ("liberal", "conservative") if polar_only else self.model.vocab.options("ideology")
        if ideology not in allowed:
            raise UnknownOptionError(f"unknown ideology {ideology!r}")

    def prepare_text(self, text: str) -> tuple[list[str], list[tuple[int, int]]]:
        """Tokenize and re-apply training-time phrase merges, per paragraph."""
        tokens, spans = tokenize_paragraphs(text)
        merged: list[str] = []
        merged_spans: list[tuple[int, int]] = []
        for start, end in spans:
            para = merge_by_vocab(tokens[start:end], self.model.vocab)
            merged_spans.append((len(merged), len(merged) + len(para)))
            merged.extend(para)
        return merged, merged_spans

    def analyze_text(self, text: str, topic: str) -> dict:
        self.check_topic(topic)
        tokens, _ = self.prepare_text(text)
        return self.depolarizer.analyze(tokens, topic)

    def depolarize_text(self, text: str, topic: str, ideology: str, config: AnnealConfig) -> dict:
        self.check_topic(topic)
        self.check_ideology(ideology, polar_only=True)
        tokens, _ = self.prepare_text(text)
        result = self.depolarizer.anneal(tokens, topic, ideology, config)
        return result.to_json_dict()
