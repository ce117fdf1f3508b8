"""Coherence data synthesis, the balanced loss, and scorer implementations.

Negative examples are built by corrupting human-written step sequences in
two ways: inserting a duplicated step (breaks the relation between adjacent
steps) and inserting a step borrowed from a process with a different title
(breaks the shared theme). Per positive, N negatives of each kind are drawn,
and the loss down-weights the negative branch by 1/(2N) to compensate.
"""

from __future__ import annotations

import json
import math
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .data import DatasetSplit, Process, ProcessExample, SubEventSequence
from .errors import DatasetError
from .prompting import PromptTemplate, DEFAULT_TEMPLATE, parse_coherence_text, render_coherence_text
from .tokenization import split_tokens

CORRUPTION_KINDS = ("none", "duplicate", "irrelevant")

SCORE_EPSILON = 1e-7


@dataclass(frozen=True)
class CoherenceExample:
    """A rendered process+steps text with a binary label and corruption tag."""

    text: str
    label: int
    corruption: str

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")
        if self.corruption not in CORRUPTION_KINDS:
            raise ValueError(f"corruption must be one of {CORRUPTION_KINDS}")
        if (self.label == 1) != (self.corruption == "none"):
            raise ValueError("label 1 must pair with corruption 'none' and only then")


def corrupt_local(seq: SubEventSequence, rng: random.Random) -> SubEventSequence:
    """Copy one step and re-insert it at a random gap (two rng draws:
    source index, then insertion gap over all m+1 positions)."""
    if len(seq) == 0:
        raise ValueError("cannot corrupt an empty sequence")
    events = list(seq.events)
    source = rng.randrange(len(events))
    position = rng.randrange(len(events) + 1)
    events.insert(position, events[source])
    return SubEventSequence(tuple(events))


def corrupt_global(
    seq: SubEventSequence,
    donor_pool: Sequence[ProcessExample],
    self_process: Process,
    rng: random.Random,
) -> SubEventSequence:
    """Insert a step taken from a donor process with a different title.

    Draw order: donor example, reference, event, then insertion gap.
    """
    if len(seq) == 0:
        raise ValueError("cannot corrupt an empty sequence")
    donors = [ex for ex in donor_pool if ex.process.title != self_process.title]
    if not donors:
        raise ValueError(
            f"no eligible donor: every pool example shares the title {self_process.title!r}"
        )
    donor = donors[rng.randrange(len(donors))]
    reference = donor.references[rng.randrange(len(donor.references))]
    borrowed = reference.events[rng.randrange(len(reference.events))]
    events = list(seq.events)
    position = rng.randrange(len(events) + 1)
    events.insert(position, borrowed)
    return SubEventSequence(tuple(events))


def build_coherence_dataset(
    split: DatasetSplit,
    n_negatives: int,
    seed: int,
    template: PromptTemplate = DEFAULT_TEMPLATE,
) -> list[CoherenceExample]:
    """Render 1 positive plus N duplicate and N irrelevant negatives per reference.

    Deterministic for a fixed seed; positives do not depend on the seed at all.
    """
    if n_negatives < 1:
        raise ValueError("n_negatives must be at least 1")
    rng = random.Random(seed)
    out: list[CoherenceExample] = []
    pool = split.examples
    for example in split.examples:
        for reference in example.references:
            out.append(
                CoherenceExample(
                    text=render_coherence_text(example.process, reference, template),
                    label=1,
                    corruption="none",
                )
            )
            for _ in range(n_negatives):
                corrupted = corrupt_local(reference, rng)
                out.append(
                    CoherenceExample(
                        text=render_coherence_text(example.process, corrupted, template),
                        label=0,
                        corruption="duplicate",
                    )
                )
            for _ in range(n_negatives):
                corrupted = corrupt_global(reference, pool, example.process, rng)
                out.append(
                    CoherenceExample(
                        text=render_coherence_text(example.process, corrupted, template),
                        label=0,
                        corruption="irrelevant",
                    )
                )
    return out


def save_coherence_dataset(examples: Iterable[CoherenceExample], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for ex in examples:
            handle.write(
                json.dumps(
                    {"text": ex.text, "label": ex.label, "corruption": ex.corruption},
                    ensure_ascii=False,
                )
                + "\n"
            )
    return path


def load_coherence_dataset(path: str | Path) -> list[CoherenceExample]:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"coherence dataset not found: {path}")
    out = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                out.append(
                    CoherenceExample(
                        text=record["text"],
                        label=record["label"],
                        corruption=record["corruption"],
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
    return out


def clamp_score(score: float, epsilon: float = SCORE_EPSILON) -> float:
    return min(max(score, epsilon), 1.0 - epsilon)


def coherence_loss(label: int, score: float, n_negatives: int) -> float:
    """Balanced cross-entropy: ``-(y log s + (1 - y) log(1 - s) / (2N))``.

    Scores of exactly 0 or 1 are rejected (infinite loss); callers clamp.
    """
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label}")
    if n_negatives < 1:
        raise ValueError("n_negatives must be at least 1")
    if not 0.0 < score < 1.0:
        raise ValueError(f"score must lie strictly inside (0, 1), got {score}")
    if label == 1:
        return -math.log(score)
    return -math.log(1.0 - score) / (2.0 * n_negatives)


def coherence_loss_grad(label: int, score: float, n_negatives: int) -> float:
    """Derivative of :func:`coherence_loss` with respect to the score."""
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label}")
    if not 0.0 < score < 1.0:
        raise ValueError(f"score must lie strictly inside (0, 1), got {score}")
    if label == 1:
        return -1.0 / score
    return 1.0 / ((2.0 * n_negatives) * (1.0 - score))


class CoherenceScorerContract(ABC):
    """Deterministic text scorer in [0, 1]; higher means more coherent."""

    @abstractmethod
    def score(self, text: str) -> float: ...

    @abstractmethod
    def train(
        self,
        examples: Sequence[CoherenceExample],
        hyperparameters: Mapping[str, float] | None = None,
    ) -> "CoherenceScorerContract": ...


class CallableScorer(CoherenceScorerContract):
    """Wraps a plain function; training is a no-op. Useful for oracles."""

    def __init__(self, fn: Callable[[str], float]):
        self._fn = fn

    def score(self, text: str) -> float:
        return float(self._fn(text))

    def train(self, examples, hyperparameters=None) -> "CallableScorer":
        return self


class LogisticCoherenceScorer(CoherenceScorerContract):
    """Hashed co-occurrence logistic model trained with the balanced loss.

    Features are presence indicators over token unigrams, title-step token
    pairs, and cross-step token pairs, plus two structural signals (exact
    duplicate step count and maximum pairwise step Jaccard overlap). Pair
    features make theme mismatches linearly separable; the structural ones
    carry duplicate detection. Training is full-batch Adam from a zero
    initialisation, so it is deterministic without any seed.
    """

    def __init__(
        self,
        hashed_dim: int = 8192,
        template: PromptTemplate = DEFAULT_TEMPLATE,
    ):
        if hashed_dim < 16:
            raise ValueError("hashed_dim is too small to be useful")
        self._hashed_dim = hashed_dim
        self._template = template
        self._dim = hashed_dim + 2
        self._weights = np.zeros(self._dim, dtype=np.float64)
        self._bias = 0.0

    def _bucket(self, key: str) -> int:
        import hashlib

        digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self._hashed_dim

    def _features(self, text: str) -> np.ndarray:
        parsed = parse_coherence_text(text, self._template)
        title_tokens = set(split_tokens(parsed.title))
        step_token_sets = [set(split_tokens(s)) for s in parsed.step_texts]
        vec = np.zeros(self._dim, dtype=np.float64)
        for tokens in [title_tokens] + step_token_sets:
            for tok in tokens:
                vec[self._bucket("u:" + tok)] = 1.0
        all_step_tokens = set().union(*step_token_sets) if step_token_sets else set()
        for t in title_tokens:
            for s in all_step_tokens:
                vec[self._bucket(f"p:{t}|{s}")] = 1.0
        for i in range(len(step_token_sets)):
            for j in range(i + 1, len(step_token_sets)):
                for a in step_token_sets[i]:
                    for b in step_token_sets[j]:
                        lo, hi = sorted((a, b))
                        vec[self._bucket(f"x:{lo}|{hi}")] = 1.0
        steps = list(parsed.step_texts)
        vec[self._hashed_dim] = float(len(steps) - len(set(steps)))
        vec[self._hashed_dim + 1] = self._max_jaccard(step_token_sets)
        return vec

    @staticmethod
    def _max_jaccard(step_token_sets: list[set[str]]) -> float:
        best = 0.0
        for i in range(len(step_token_sets)):
            for j in range(i + 1, len(step_token_sets)):
                a, b = step_token_sets[i], step_token_sets[j]
                union = len(a | b)
                if union:
                    best = max(best, len(a & b) / union)
        return best

    def score(self, text: str) -> float:
        z = float(np.dot(self._weights, self._features(text)) + self._bias)
        return clamp_score(1.0 / (1.0 + math.exp(-z)))

    def train(
        self,
        examples: Sequence[CoherenceExample],
        hyperparameters: Mapping[str, float] | None = None,
    ) -> "LogisticCoherenceScorer":
        if not examples:
            raise ValueError("cannot train on an empty example list")
        params = dict(hyperparameters or {})
        learning_rate = float(params.get("learning_rate", 0.05))
        epochs = int(params.get("epochs", 300))
        l2 = float(params.get("l2", 1e-4))
        positives = sum(1 for ex in examples if ex.label == 1)
        negatives = len(examples) - positives
        if positives == 0 or negatives == 0:
            raise ValueError("training data must contain both labels")
        inferred_n = max(1, round(negatives / (2 * positives)))
        n_negatives = int(params.get("n_negatives", inferred_n))

        features = np.stack([self._features(ex.text) for ex in examples])
        labels = np.array([ex.label for ex in examples], dtype=np.float64)
        negative_weight = 1.0 / (2.0 * n_negatives)

        weights = np.zeros(self._dim, dtype=np.float64)
        bias = 0.0
        m_w = np.zeros_like(weights)
        v_w = np.zeros_like(weights)
        m_b = v_b = 0.0
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        n = len(examples)
        for step in range(1, epochs + 1):
            z = features @ weights + bias
            p = 1.0 / (1.0 + np.exp(-z))
            # d(loss)/dz: (p - 1) on positives, p / (2N) on negatives.
            grad_z = np.where(labels == 1.0, p - 1.0, negative_weight * p) / n
            grad_w = features.T @ grad_z + l2 * weights
            grad_b = float(np.sum(grad_z))
            m_w = beta1 * m_w + (1 - beta1) * grad_w
            v_w = beta2 * v_w + (1 - beta2) * grad_w**2
            m_b = beta1 * m_b + (1 - beta1) * grad_b
            v_b = beta2 * v_b + (1 - beta2) * grad_b**2
            scale = math.sqrt(1 - beta2**step) / (1 - beta1**step)
            weights -= learning_rate * scale * m_w / (np.sqrt(v_w) + eps)
            bias -= learning_rate * scale * m_b / (math.sqrt(v_b) + eps)
        self._weights = weights
        self._bias = bias
        return self


SCORERS = {"logistic": LogisticCoherenceScorer}


def create_scorer(name: str, **kwargs) -> CoherenceScorerContract:
    if name not in SCORERS:
        raise KeyError(f"unknown scorer {name!r}; registered: {sorted(SCORERS)}")
    return SCORERS[name](**kwargs)


def _balanced_accuracy_inputs(test_set: Sequence[CoherenceExample], set_name: str) -> None:
    positives = sum(1 for ex in test_set if ex.label == 1)
    negatives = len(test_set) - positives
    if positives != negatives:
        raise ValueError(
            f"{set_name} test set must be balanced 1:1, got {positives} positives "
            f"and {negatives} negatives"
        )
    if not test_set:
        raise ValueError(f"{set_name} test set is empty")


def evaluate_controller(
    scorer: CoherenceScorerContract,
    local_set: Sequence[CoherenceExample],
    global_set: Sequence[CoherenceExample],
    threshold: float = 0.5,
) -> dict[str, float]:
    """Accuracy of thresholded scores on balanced local / global test sets.

    Returns ``{"local": ..., "global": ..., "all": ...}`` where "all" pools
    both sets.
    """
    _balanced_accuracy_inputs(local_set, "local")
    _balanced_accuracy_inputs(global_set, "global")

    def accuracy(test_set: Sequence[CoherenceExample]) -> float:
        correct = sum(
            1
            for ex in test_set
            if (scorer.score(ex.text) >= threshold) == bool(ex.label)
        )
        return correct / len(test_set)

    pooled = list(local_set) + list(global_set)
    return {
        "local": accuracy(local_set),
        "global": accuracy(global_set),
        "all": accuracy(pooled),
    }
