"""Prompt rendering and training-pair expansion.

The single template used everywhere is the step-numbered question::

    How to {title}? Step 1: {e1} ... Step i: {ei} Step i+1: {mask}

Segments are joined with single spaces and step texts are used verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .data import STOP_LITERAL, Process, ProcessExample, SubEventSequence, is_stop_literal
from .errors import PromptParseError


@dataclass(frozen=True)
class PromptTemplate:
    """Template parts for the step-numbered prompt.

    ``mask_token`` is backend-specific (each pretrained model has its own
    sentinel); the default suits the scripted and tiny backends.
    """

    question_prefix: str = "How to "
    question_suffix: str = "?"
    step_label: str = "Step {i}: "
    mask_token: str = "[M]"
    stop_literal: str = STOP_LITERAL


DEFAULT_TEMPLATE = PromptTemplate()


@dataclass(frozen=True)
class TrainingPair:
    """A rendered prompt and its target: a step text or the stop literal."""

    input_text: str
    target_text: str

    def __post_init__(self) -> None:
        if not self.input_text.strip():
            raise ValueError("training pair input must be non-empty")
        if not self.target_text.strip():
            raise ValueError("training pair target must be non-empty")


def _question(process: Process, template: PromptTemplate) -> str:
    return f"{template.question_prefix}{process.title}{template.question_suffix}"


def render_prompt(
    process: Process,
    prior: SubEventSequence,
    template: PromptTemplate = DEFAULT_TEMPLATE,
) -> str:
    """Render the generation prompt for the step after *prior*."""
    parts = [_question(process, template)]
    for i, event in enumerate(prior, start=1):
        parts.append(template.step_label.format(i=i) + event.text)
    parts.append(template.step_label.format(i=len(prior) + 1) + template.mask_token)
    return " ".join(parts)


def render_coherence_text(
    process: Process,
    steps: SubEventSequence,
    template: PromptTemplate = DEFAULT_TEMPLATE,
) -> str:
    """Render the same template without a trailing mask, for coherence scoring."""
    if len(steps) == 0:
        raise ValueError("coherence text requires at least one step")
    parts = [_question(process, template)]
    for i, event in enumerate(steps, start=1):
        parts.append(template.step_label.format(i=i) + event.text)
    return " ".join(parts)


def expand_training_pairs(
    example: ProcessExample,
    template: PromptTemplate = DEFAULT_TEMPLATE,
) -> list[TrainingPair]:
    """Expand each reference of length m into m+1 pairs, stop target last.

    Pairs from multiple references are concatenated in reference order.
    """
    pairs: list[TrainingPair] = []
    for reference in example.references:
        events = reference.events
        for i, event in enumerate(events):
            prior = SubEventSequence(events[:i])
            pairs.append(TrainingPair(render_prompt(example.process, prior, template), event.text))
        pairs.append(
            TrainingPair(
                render_prompt(example.process, reference, template),
                template.stop_literal,
            )
        )
    return pairs


@dataclass(frozen=True)
class ParsedPrompt:
    title: str
    step_texts: tuple[str, ...]
    has_mask: bool


def parse_prompt(text: str, template: PromptTemplate = DEFAULT_TEMPLATE) -> ParsedPrompt:
    """Split a rendered prompt back into (title, steps, mask flag).

    Lossless whenever step texts do not themselves contain the step-label
    pattern; inconsistent step numbering raises :class:`PromptParseError`.
    """
    label_pattern = re.compile(
        " " + re.escape(template.step_label).replace(re.escape("{i}"), r"(\d+)")
    )
    pieces = label_pattern.split(text)
    question = pieces[0]
    if not question.startswith(template.question_prefix) or not question.endswith(
        template.question_suffix
    ):
        raise PromptParseError(f"prompt does not start with a well-formed question: {text!r}")
    title = question[len(template.question_prefix) : len(question) - len(template.question_suffix)]
    if not title.strip():
        raise PromptParseError("prompt question has an empty title")
    numbers = [int(n) for n in pieces[1::2]]
    segments = pieces[2::2]
    if numbers != list(range(1, len(numbers) + 1)):
        raise PromptParseError(
            f"step numbering is not consecutive from 1: {numbers} in {text!r}"
        )
    has_mask = bool(segments) and segments[-1] == template.mask_token
    step_texts = segments[:-1] if has_mask else segments
    if any(not s.strip() for s in step_texts):
        raise PromptParseError(f"prompt contains an empty step segment: {text!r}")
    return ParsedPrompt(title=title, step_texts=tuple(step_texts), has_mask=has_mask)


def parse_coherence_text(text: str, template: PromptTemplate = DEFAULT_TEMPLATE) -> ParsedPrompt:
    """Parse a coherence text; rejects inputs that still carry a mask."""
    parsed = parse_prompt(text, template)
    if parsed.has_mask:
        raise PromptParseError(f"coherence text unexpectedly ends with a mask: {text!r}")
    return parsed


def is_stop_target(text: str, template: PromptTemplate = DEFAULT_TEMPLATE) -> bool:
    return is_stop_literal(text, template.stop_literal)
