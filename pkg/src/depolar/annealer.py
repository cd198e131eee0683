"""Simulated-annealing search over neutral replacements for polar words.

The search state assigns each rewrite slot either KEEP or one of its
retrieved candidates. Proposals flip one slot; acceptance follows the
Metropolis rule on the reward (negative paragraph polarity plus BLEU
fluency, scaled by 1/(steps + lambda)). The best assignment ever seen is
returned, so a run can only improve on the unmodified text.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from depolar.candidates import CandidateList, CandidateRetriever
from depolar.fluency import BleuConfig, DEFAULT_BLEU, bleu, bleu_from_counts
from depolar.polarity import PolarityIndex

KEEP = -1


@dataclass(frozen=True)
class AnnealConfig:
    t_max: float = 1000.0
    t_min: float = 100.0
    d: float = 1.0
    lam: float = 0.01
    max_candidates: int = 20
    max_iterations: int = 25000
    max_positions: int = 12
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.t_max > self.t_min > 0):
            raise ValueError("need t_max > t_min > 0")
        if self.lam <= 0 or self.d < 1:
            raise ValueError("need lam > 0 and d >= 1")
        if self.max_candidates < 1 or self.max_positions < 1:
            raise ValueError("candidate and position caps must be positive")


def reward(polarity: float, fluency: float, steps: int, lam: float = 0.01) -> float:
    """(-polarity + fluency) / (steps + lam)."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    return (-polarity + fluency) / (steps + lam)


def modification_reward(
    index: PolarityIndex,
    modified: list[str],
    original: list[str],
    topic: str,
    lam: float = 0.01,
    bleu_config: BleuConfig = DEFAULT_BLEU,
) -> float:
    """Reward of a full modification recomputed from the token sequences."""
    if len(modified) != len(original):
        raise ValueError("replacements are token-for-token; lengths must match")
    steps = sum(1 for a, b in zip(modified, original) if a != b)
    polarity = index.paragraph_polarity(modified, topic)
    fluency = bleu(modified, original, bleu_config)
    return reward(polarity, fluency, steps, lam)


def accept(delta_reward: float, temperature: float, rng: np.random.Generator) -> bool:
    """Metropolis rule: improvements always, worsenings with exp(dR/T)."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if delta_reward > 0:
        return True
    return rng.random() < math.exp(delta_reward / temperature)


def cooled_temperature(t_max: float, d: float, step: int) -> float:
    """t_max / ln(step + d); never applied while ln would be <= 0."""
    if step + d <= 1.0:
        return t_max
    return t_max / math.log(step + d)


@dataclass(frozen=True)
class SlotChoice:
    word: str
    contribution: float  # post-replacement positive z at this position
    distance: float


@dataclass(frozen=True)
class RewriteSlot:
    """One replaceable polar position with its effective candidate choices."""

    position: int
    word: str
    z: float
    candidates: CandidateList
    choices: tuple[SlotChoice, ...]


@dataclass(frozen=True)
class Replacement:
    position: int
    old: str
    new: str


@dataclass
class DepolarizationResult:
    tokens: list[str]
    replacements: list[Replacement]
    polarity_before: float
    polarity_after: float
    fluency: float
    reward: float
    iterations: int
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "tokens": self.tokens,
            "text": " ".join(self.tokens),
            "replacements": [
                {"position": r.position, "old": r.old, "new": r.new} for r in self.replacements
            ],
            "polarity_before": self.polarity_before,
            "polarity_after": self.polarity_after,
            "fluency": self.fluency,
            "reward": self.reward,
            "iterations": self.iterations,
            "seed": self.seed,
        }


@dataclass
class AnnealState:
    """Mutable search state over the rewrite slots of one paragraph.

    Polarity and BLEU are maintained incrementally: a proposal flips one
    slot, which touches at most 2n-1 n-grams per order, so evaluating it
    costs O(max_order^2) dictionary lookups instead of a full rescore.
    """

    original: list[str]
    slots: list[RewriteSlot]
    lam: float
    base_polarity: float = 0.0
    bleu_config: BleuConfig = DEFAULT_BLEU
    iteration: int = 0
    temperature: float = 0.0
    assignment: list[int] = field(init=False)
    polarity: float = field(init=False)
    fluency: float = field(init=False)
    steps: int = field(init=False)

    def __post_init__(self) -> None:
        self.assignment = [KEEP] * len(self.slots)
        self.polarity = self.base_polarity
        self.fluency = 1.0
        self.steps = 0
        self._tokens = list(self.original)
        self._orders = range(1, self.bleu_config.max_order + 1)
        self._ref = {n: Counter(self._grams(self.original, n)) for n in self._orders}
        self._cand = {n: Counter(dict(self._ref[n])) for n in self._orders}
        self._totals = {n: max(len(self.original) - n + 1, 0) for n in self._orders}
        self._matched = {n: self._totals[n] for n in self._orders}
        self._fluency_cache: dict[tuple[int, ...], float] = {tuple(self.assignment): 1.0}

    @staticmethod
    def _grams(tokens: list[str], order: int):
        return (tuple(tokens[i : i + order]) for i in range(len(tokens) - order + 1))

    def reward_value(self) -> float:
        return reward(self.polarity, self.fluency, self.steps, self.lam)

    def tokens_for(self, assignment: list[int]) -> list[str]:
        tokens = list(self.original)
        for slot, choice in zip(self.slots, assignment):
            if choice != KEEP:
                tokens[slot.position] = slot.choices[choice].word
        return tokens

    def _word_for(self, slot_index: int, choice: int) -> str:
        slot = self.slots[slot_index]
        return slot.word if choice == KEEP else slot.choices[choice].word

    def evaluate(self, assignment: list[int]) -> tuple[float, float, int]:
        """(polarity, fluency, steps) for an assignment; does not mutate."""
        polarity = self.base_polarity
        steps = 0
        for slot, choice in zip(self.slots, assignment):
            if choice != KEEP:
                polarity += slot.choices[choice].contribution - slot.z
                steps += 1

        key = tuple(assignment)
        fluency = self._fluency_cache.get(key)
        if fluency is None:
            diff = [i for i, (a, b) in enumerate(zip(assignment, self.assignment)) if a != b]
            if len(diff) == 0:
                fluency = self.fluency
            elif len(diff) == 1:
                slot_index = diff[0]
                fluency = self._fluency_after_swap(
                    self.slots[slot_index].position, self._word_for(slot_index, assignment[slot_index])
                )
            else:
                fluency = bleu(self.tokens_for(assignment), self.original, self.bleu_config)
            self._fluency_cache[key] = fluency
        return polarity, fluency, steps

    def _fluency_after_swap(self, position: int, new_word: str) -> float:
        tokens = self._tokens
        if tokens[position] == new_word:
            return self.fluency
        counts = []
        n_tokens = len(tokens)
        for order in self._orders:
            matched = self._matched[order]
            total = self._totals[order]
            if total > 0:
                cand = self._cand[order]
                ref = self._ref[order]
                adjust: dict[tuple, int] = {}
                lo = max(0, position - order + 1)
                hi = min(n_tokens - order, position)
                for start in range(lo, hi + 1):
                    old_gram = tuple(tokens[start : start + order])
                    new_gram = tuple(
                        new_word if start + k == position else tokens[start + k] for k in range(order)
                    )
                    if old_gram == new_gram:
                        continue
                    have = cand[old_gram] + adjust.get(old_gram, 0)
                    if have <= ref[old_gram]:
                        matched -= 1
                    adjust[old_gram] = adjust.get(old_gram, 0) - 1
                    have = cand[new_gram] + adjust.get(new_gram, 0)
                    if have + 1 <= ref[new_gram]:
                        matched += 1
                    adjust[new_gram] = adjust.get(new_gram, 0) + 1
            counts.append((matched, total))
        return bleu_from_counts(counts, n_tokens, n_tokens)

    def apply(self, assignment: list[int]) -> None:
        polarity, fluency, steps = self.evaluate(assignment)
        diff = [i for i, (a, b) in enumerate(zip(assignment, self.assignment)) if a != b]
        for slot_index in diff:
            self._swap_token(self.slots[slot_index].position, self._word_for(slot_index, assignment[slot_index]))
        self.assignment = list(assignment)
        self.polarity = polarity
        self.fluency = fluency
        self.steps = steps

    def _swap_token(self, position: int, new_word: str) -> None:
        tokens = self._tokens
        if tokens[position] == new_word:
            return
        n_tokens = len(tokens)
        for order in self._orders:
            if self._totals[order] == 0:
                continue
            cand = self._cand[order]
            ref = self._ref[order]
            matched = self._matched[order]
            lo = max(0, position - order + 1)
            hi = min(n_tokens - order, position)
            for start in range(lo, hi + 1):
                old_gram = tuple(tokens[start : start + order])
                new_gram = tuple(
                    new_word if start + k == position else tokens[start + k] for k in range(order)
                )
                if old_gram == new_gram:
                    continue
                if cand[old_gram] <= ref[old_gram]:
                    matched -= 1
                cand[old_gram] -= 1
                if cand[old_gram] == 0:
                    del cand[old_gram]
                if cand[new_gram] + 1 <= ref[new_gram]:
                    matched += 1
                cand[new_gram] += 1
            self._matched[order] = matched
        tokens[position] = new_word

    def distinct_assignments_seen(self) -> int:
        return len(self._fluency_cache)


def propose(state: AnnealState, rng: np.random.Generator) -> list[int] | None:
    """Uniformly pick a slot, then uniformly KEEP or one effective candidate.

    Candidates that would not lower the slot's polarity contribution were
    already dropped when the slot was built, so every proposal is a lawful
    move; returns None when no slot has candidates.
    """
    usable = [i for i, slot in enumerate(state.slots) if slot.choices]
    if not usable:
        return None
    slot_i = usable[int(rng.integers(0, len(usable)))]
    n = len(state.slots[slot_i].choices)
    choice = int(rng.integers(0, n + 1)) - 1  # -1 encodes KEEP
    assignment = list(state.assignment)
    assignment[slot_i] = choice
    return assignment


class Depolarizer:
    """Binds the trained model, polarity index and retriever into the
    rewrite pipeline used by the CLI, the service and the evaluation kit."""

    def __init__(
        self,
        index: PolarityIndex,
        retriever: CandidateRetriever,
        bleu_config: BleuConfig = DEFAULT_BLEU,
    ):
        self.index = index
        self.retriever = retriever
        self.model = retriever.model
        self.bleu_config = bleu_config

    def analyze(self, tokens: list[str], topic: str) -> dict:
        detected = self.index.detect_polar_words(tokens, topic)
        return {
            "paragraph_polarity": sum(z for _, _, z in detected),
            "polar": [{"pos": pos, "word": word, "z": z} for pos, word, z in detected],
        }

    def build_slots(self, tokens: list[str], topic: str, ideology: str, config: AnnealConfig) -> list[RewriteSlot]:
        """Rewrite slots: the highest-z detected positions, capped, each with
        its candidate list filtered to polarity-lowering choices.

        The z > 0 rule decides what counts as polar; the cap bounds how many
        positions one annealing run may touch, which also bounds how much
        fluency a rewrite can spend.
        """
        detected = self.index.detect_polar_words(tokens, topic)
        detected.sort(key=lambda item: (-item[2], item[0]))
        slots = []
        lists_by_word: dict[str, CandidateList] = {}
        for pos, word, z in detected[: config.max_positions]:
            if word not in lists_by_word:
                lists_by_word[word] = self.retriever.neutral_candidates(
                    word, ideology, topic, k=config.max_candidates
                )
            candidates = lists_by_word[word]
            choices = []
            for entry in candidates.entries:
                contribution = self._contribution(entry.word, topic)
                if contribution < z:
                    choices.append(SlotChoice(entry.word, contribution, entry.distance))
            slots.append(RewriteSlot(pos, word, z, candidates, tuple(choices)))
        slots.sort(key=lambda s: s.position)
        return slots

    def _contribution(self, word: str, topic: str) -> float:
        z = self.index.z_score(word, topic)
        return z if z is not None and z > 0 else 0.0

    def anneal(self, tokens: list[str], topic: str, ideology: str, config: AnnealConfig | None = None) -> DepolarizationResult:
        """Full search; returns the identity result when nothing is polar."""
        config = config or AnnealConfig()
        rng = np.random.default_rng(config.seed)
        base_polarity = self.index.paragraph_polarity(tokens, topic)
        slots = [s for s in self.build_slots(tokens, topic, ideology, config) if s.choices]
        state = AnnealState(list(tokens), slots, config.lam, base_polarity, self.bleu_config)
        state.temperature = config.t_max

        best_assignment = list(state.assignment)
        best_reward = state.reward_value()
        step = 0
        if slots:
            while state.temperature > config.t_min and step < config.max_iterations:
                proposal = propose(state, rng)
                next_pol, next_flu, next_steps = state.evaluate(proposal)
                next_reward = reward(next_pol, next_flu, next_steps, config.lam)
                if accept(next_reward - state.reward_value(), state.temperature, rng):
                    state.apply(proposal)
                    if next_reward > best_reward:
                        best_reward = next_reward
                        best_assignment = list(proposal)
                step += 1
                state.iteration = step
                state.temperature = cooled_temperature(config.t_max, config.d, step)

        final_pol, final_flu, _ = state.evaluate(best_assignment)
        final_tokens = state.tokens_for(best_assignment)
        replacements = [
            Replacement(slot.position, slot.word, slot.choices[choice].word)
            for slot, choice in zip(slots, best_assignment)
            if choice != KEEP
        ]
        return DepolarizationResult(
            tokens=final_tokens,
            replacements=replacements,
            polarity_before=base_polarity,
            polarity_after=final_pol,
            fluency=final_flu,
            reward=best_reward,
            iterations=step,
            seed=config.seed,
        )

    def suggest(self, tokens: list[str], topic: str, ideology: str, config: AnnealConfig | None = None) -> "EditState":
        """Semi-automatic entry point: the same slots the annealer would use,
        with full candidate lists for a human to choose from."""
        config = config or AnnealConfig()
        slots = self.build_slots(tokens, topic, ideology, config)
        return EditState(self, list(tokens), topic, ideology, slots, config)


class EditState:
    """One human-editable paragraph: apply/revert choices one at a time."""

    def __init__(
        self,
        depolarizer: Depolarizer,
        tokens: list[str],
        topic: str,
        ideology: str,
        slots: list[RewriteSlot],
        config: AnnealConfig,
    ):
        self.depolarizer = depolarizer
        self.original = tokens
        self.topic = topic
        self.ideology = ideology
        self.slots = slots
        self.config = config
        self.assignment: dict[int, str] = {}  # position -> replacement word
        self.polarity_before = depolarizer.index.paragraph_polarity(tokens, topic)

    def slot_at(self, position: int) -> RewriteSlot:
        for slot in self.slots:
            if slot.position == position:
                return slot
        raise ValueError(f"no rewrite slot at position {position}")

    def suggestions(self) -> list[dict]:
        """Per-slot candidate lists with polarity deltas and fluency impact."""
        out = []
        for slot in self.slots:
            entries = []
            for entry in slot.candidates.entries:
                contribution = self.depolarizer._contribution(entry.word, self.topic)
                trial = list(self.current_tokens())
                trial[slot.position] = entry.word
                entries.append(
                    {
                        "word": entry.word,
                        "distance": entry.distance,
                        "polarity_delta": contribution - slot.z,
                        "fluency": bleu(trial, self.original, self.depolarizer.bleu_config),
                    }
                )
            out.append({"position": slot.position, "word": slot.word, "z": slot.z, "candidates": entries})
        return out

    def apply(self, position: int, choice: str | None) -> dict:
        """Set one slot to a candidate word (or None to revert); returns scores."""
        slot = self.slot_at(position)
        if choice is None:
            self.assignment.pop(position, None)
        else:
            if choice not in {e.word for e in slot.candidates.entries}:
                raise ValueError(f"{choice!r} is not a candidate at position {position}")
            self.assignment[position] = choice
        return self.scores()

    def current_tokens(self) -> list[str]:
        tokens = list(self.original)
        for position, word in self.assignment.items():
            tokens[position] = word
        return tokens

    def scores(self) -> dict:
        tokens = self.current_tokens()
        polarity = self.depolarizer.index.paragraph_polarity(tokens, self.topic)
        fluency = bleu(tokens, self.original, self.depolarizer.bleu_config) if tokens else 1.0
        steps = len(self.assignment)
        return {
            "polarity_before": self.polarity_before,
            "polarity": polarity,
            "fluency": fluency,
            "reward": reward(polarity, fluency, steps, self.config.lam),
            "steps": steps,
        }

    def replacements(self) -> list[Replacement]:
        return [
            Replacement(pos, self.original[pos], word)
            for pos, word in sorted(self.assignment.items())
        ]
