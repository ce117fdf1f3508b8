"""The three comparison systems: all-at-once, top-1 similar, zero-shot.

All-at-once trains and decodes whole sequences in a single generator call,
with steps joined by a dedicated delimiter so the join is losslessly
invertible. Top-1 similar retrieves the training reference whose title
embedding is most cosine-similar to the query. Zero-shot prompts an
un-fine-tuned generator and splits its raw output into sentences.
"""

from __future__ import annotations

import random

from .backends import GeneratorContract
from .data import DatasetSplit, Process, ProcessExample, SubEventSequence, is_stop_literal
from .embedding import EmbeddingContract, cosine
from .prompting import TrainingPair
from .tokenization import segment_sentences

STEP_SEPARATOR = " || "

ZERO_SHOT_SUFFIX = " Generate the events to solve it."


def join_steps(sequence: SubEventSequence) -> str:
    return STEP_SEPARATOR.join(sequence.texts())


def split_steps(text: str) -> list[str]:
    """Inverse of :func:`join_steps` for separator-free steps.

    Blank pieces and stray stop literals in raw generations are dropped.
    """
    pieces = [p.strip() for p in text.split(STEP_SEPARATOR)]
    return [p for p in pieces if p and not is_stop_literal(p)]


def all_at_once_prompt(process: Process) -> str:
    return f"How to {process.title}?"


def make_all_at_once_pairs(example: ProcessExample) -> list[TrainingPair]:
    """One whole-sequence training pair per reference."""
    prompt = all_at_once_prompt(example.process)
    return [TrainingPair(prompt, join_steps(ref)) for ref in example.references]


def all_at_once_decode(process: Process, generator: GeneratorContract) -> SubEventSequence:
    """Single generator call; the output splits on the step separator."""
    candidates = generator.topk(all_at_once_prompt(process), 1)
    return SubEventSequence.from_texts(split_steps(candidates[0].text))


def top1_similar(
    process: Process,
    train: DatasetSplit,
    embedder: EmbeddingContract,
    seed: int,
) -> SubEventSequence:
    """Reference of the most title-similar training process.

    Similarity ties keep the lowest dataset index; among multiple references
    of the winning process one is picked uniformly under *seed*. Zero-norm
    embeddings compare at similarity 0.
    """
    if len(train) == 0:
        raise ValueError("top1_similar needs a non-empty training split")
    query = embedder.embed(process.title)
    best_index = 0
    best_similarity = -float("inf")
    for i, example in enumerate(train):
        similarity = cosine(query, embedder.embed(example.process.title))
        if similarity > best_similarity:
            best_index, best_similarity = i, similarity
    references = train.examples[best_index].references
    if len(references) == 1:
        return references[0]
    return references[random.Random(seed).randrange(len(references))]


def zero_shot_prompt(process: Process) -> str:
    return f"How to {process.title}?{ZERO_SHOT_SUFFIX}"


def zero_shot_decode(process: Process, generator: GeneratorContract) -> SubEventSequence:
    """Prompt without fine-tuning; sentence-segment the raw generation."""
    candidates = generator.topk(zero_shot_prompt(process), 1)
    sentences = [s for s in segment_sentences(candidates[0].text) if not is_stop_literal(s)]
    return SubEventSequence.from_texts(sentences)
