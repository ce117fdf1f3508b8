"""Iterative event-level decoding with coherence-controlled re-ranking.

Each iteration renders the step prompt, asks the generator for top-k
candidates, optionally scores each candidate's extended text for coherence,
and picks the argmax of ``logprob + lambda * coherence``. Decoding ends when
the chosen candidate is the stop literal or the step cap is reached.

How the stop candidate interacts with re-ranking is configurable:

* ``rerank_stop=True`` (default): the stop candidate competes with an
  imputed coherence score, namely the scorer's score of the sequence built
  so far (stopping asserts the current sequence is already complete). With
  no steps yet there is no text to score and the imputed score is 0.0.
* ``rerank_stop=False``: stopping is the generator's call alone. Decoding
  stops iff the stop literal is the generator's top candidate; otherwise
  stop candidates are dropped and the rest are re-ranked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .backends import Candidate, GeneratorContract
from .coherence import CoherenceScorerContract
from .data import Process, SubEvent, SubEventSequence, is_stop_literal
from .errors import DecodeError
from .prompting import PromptTemplate, DEFAULT_TEMPLATE, render_coherence_text, render_prompt

STOP_REASON_LITERAL = "stop-literal"
STOP_REASON_MAX_STEPS = "max-steps"


@dataclass(frozen=True)
class DecodingConfig:
    k: int = 5
    lambda_weight: float = 1.0
    max_steps: int = 20
    use_coherence: bool = True
    rerank_stop: bool = True
    stop_literal: str = "none"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.lambda_weight < 0.0:
            raise ValueError("lambda must be non-negative")


@dataclass(frozen=True)
class ScoredCandidate:
    """A candidate with its coherence score and combined ranking score."""

    candidate: Candidate
    coherence: Optional[float]
    combined: float


@dataclass(frozen=True)
class IterationRecord:
    prompt: str
    candidates: tuple[ScoredCandidate, ...]
    chosen_index: int


@dataclass(frozen=True)
class DecodeTrace:
    iterations: tuple[IterationRecord, ...]
    stop_reason: str

    def to_dict(self) -> dict:
        return {
            "stop_reason": self.stop_reason,
            "iterations": [
                {
                    "prompt": it.prompt,
                    "chosen_index": it.chosen_index,
                    "candidates": [
                        {
                            "text": sc.candidate.text,
                            "logprob": sc.candidate.logprob,
                            "coherence": sc.coherence,
                            "combined": sc.combined,
                        }
                        for sc in it.candidates
                    ],
                }
                for it in self.iterations
            ],
        }


def combined_score(logprob: float, coherence: Optional[float], lambda_weight: float) -> float:
    """The re-ranking objective; coherence-free candidates keep their logprob."""
    if coherence is None:
        return logprob
    return logprob + lambda_weight * coherence


def rerank(
    candidates: Sequence[Candidate],
    coherence_scores: Sequence[float],
    lambda_weight: float,
) -> int:
    """Index of the argmax of ``logprob + lambda * coherence``.

    Ties go to the lower index, i.e. the higher generator rank.
    """
    if not candidates:
        raise ValueError("rerank needs at least one candidate")
    if len(candidates) != len(coherence_scores):
        raise ValueError(
            f"got {len(candidates)} candidates but {len(coherence_scores)} coherence scores"
        )
    best_index = 0
    best_score = combined_score(candidates[0].logprob, coherence_scores[0], lambda_weight)
    for i in range(1, len(candidates)):
        score = combined_score(candidates[i].logprob, coherence_scores[i], lambda_weight)
        if score > best_score:
            best_index, best_score = i, score
    return best_index


def decode(
    process: Process,
    generator: GeneratorContract,
    scorer: Optional[CoherenceScorerContract],
    config: DecodingConfig = DecodingConfig(),
    template: PromptTemplate | None = None,
) -> tuple[SubEventSequence, DecodeTrace]:
    """Run the iterative decode loop for *process*.

    The stop literal never appears in the returned sequence; backend and
    scorer failures are re-raised with the iteration index attached.
    """
    if config.use_coherence and scorer is None:
        raise ValueError("use_coherence requires a scorer")
    if template is None:
        template = PromptTemplate(
            mask_token=generator.mask_token, stop_literal=config.stop_literal
        )
    steps: list[SubEvent] = []
    records: list[IterationRecord] = []

    def is_stop(candidate: Candidate) -> bool:
        return is_stop_literal(candidate.text, config.stop_literal)

    for iteration in range(1, config.max_steps + 1):
        prior = SubEventSequence(tuple(steps))
        prompt = render_prompt(process, prior, template)
        try:
            candidates = generator.topk(prompt, config.k)
        except Exception as exc:
            raise DecodeError(f"iteration {iteration}: generator failed: {exc}") from exc
        if not candidates:
            raise DecodeError(f"iteration {iteration}: generator returned no candidates")

        if not config.use_coherence:
            scored = tuple(
                ScoredCandidate(c, None, combined_score(c.logprob, None, 0.0))
                for c in candidates
            )
            chosen_index = 0
        elif not config.rerank_stop and is_stop(candidates[0]):
            scored = tuple(
                ScoredCandidate(c, None, combined_score(c.logprob, None, 0.0))
                for c in candidates
            )
            chosen_index = 0
        else:
            pool = candidates
            if not config.rerank_stop:
                # Top-1 was not the stop literal, so at least one survives.
                pool = [c for c in candidates if not is_stop(c)]
            coherence_scores: list[float] = []
            for candidate in pool:
                try:
                    if is_stop(candidate):
                        if steps:
                            text = render_coherence_text(process, prior, template)
                            coherence_scores.append(float(scorer.score(text)))
                        else:
                            coherence_scores.append(0.0)
                    else:
                        extended = SubEventSequence(tuple(steps) + (SubEvent(candidate.text),))
                        text = render_coherence_text(process, extended, template)
                        coherence_scores.append(float(scorer.score(text)))
                except DecodeError:
                    raise
                except Exception as exc:
                    raise DecodeError(
                        f"iteration {iteration}: coherence scorer failed: {exc}"
                    ) from exc
            chosen_index = rerank(pool, coherence_scores, config.lambda_weight)
            scored = tuple(
                ScoredCandidate(
                    c,
                    coherence_scores[i],
                    combined_score(c.logprob, coherence_scores[i], config.lambda_weight),
                )
                for i, c in enumerate(pool)
            )
            candidates = pool

        chosen = candidates[chosen_index]
        records.append(IterationRecord(prompt=prompt, candidates=scored, chosen_index=chosen_index))
        if is_stop(chosen):
            return SubEventSequence(tuple(steps)), DecodeTrace(
                iterations=tuple(records), stop_reason=STOP_REASON_LITERAL
            )
        steps.append(SubEvent(chosen.text))

    return SubEventSequence(tuple(steps)), DecodeTrace(
        iterations=tuple(records), stop_reason=STOP_REASON_MAX_STEPS
    )
