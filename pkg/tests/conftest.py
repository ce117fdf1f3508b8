from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from procwriter.backends import Candidate, ScriptedGenerator
from procwriter.coherence import CallableScorer
from procwriter.data import Process, ProcessExample, SubEventSequence
from procwriter.prompting import parse_coherence_text, render_prompt

FIXTURE_DATA_DIR = Path(__file__).parent.parent / "data" / "fixtures"

COOK_EGGS_STEPS = [
    "Place eggs in a pot of water.",
    "Bring the water to a boil.",
    "Turn off the heat and place the eggs in cold water.",
]

BUY_A_HOUSE_STEPS = [
    "Getting your financials in order.",
    "Shopping for a home.",
    "Making an offer and finalizing the deal.",
]

RELAXING_EVENING_STEPS = [
    "Turn the lights down.",
    "Put on some music or some relaxing nature sounds.",
    "Make sure the temperature is comfortable.",
    "Turn your phone off.",
]


def chain_script(title: str, steps: list[str], logprob: float = -0.2) -> dict:
    """Script a generator that emits *steps* in order, then the stop literal."""
    process = Process(title)
    script = {}
    for i in range(len(steps)):
        prompt = render_prompt(process, SubEventSequence.from_texts(steps[:i]))
        script[prompt] = [(steps[i], logprob)]
    script[render_prompt(process, SubEventSequence.from_texts(steps))] = [("none", -0.1)]
    return script


class CountingGenerator:
    """Emits ``"Do part {i}."`` on iteration i, forever; never stops."""

    mask_token = "[M]"

    def topk(self, prompt: str, k: int) -> list[Candidate]:
        iteration = prompt.count("Step")
        return [Candidate(f"Do part {iteration}.", -0.5)][:k]

    def fine_tune(self, pairs, config, *, select_by=None):
        return self


def duplicate_vs_fresh_fixture(lead_nats: float):
    """A two-candidate second iteration where the duplicate leads by *lead_nats*."""
    process = Process("set up a tent")
    first = "Lay out the tent footprint."
    fresh = "Stake the corners."
    base = -6.0
    script = {
        render_prompt(process, SubEventSequence()): [(first, -0.2)],
        render_prompt(process, SubEventSequence.from_texts([first])): [
            (first, base + lead_nats),
            (fresh, base),
        ],
        render_prompt(process, SubEventSequence.from_texts([first, fresh])): [("none", -0.1)],
        render_prompt(process, SubEventSequence.from_texts([first, first])): [("none", -0.1)],
    }
    return process, ScriptedGenerator(script), first, fresh


def duplicate_oracle_scorer() -> CallableScorer:
    """Scores 0.0 when any step text repeats, 1.0 otherwise."""

    def score(text: str) -> float:
        steps = parse_coherence_text(text).step_texts
        return 0.0 if len(steps) != len(set(steps)) else 1.0

    return CallableScorer(score)


@pytest.fixture
def cook_eggs_example() -> ProcessExample:
    return ProcessExample(
        Process("cook eggs"),
        (SubEventSequence.from_texts(COOK_EGGS_STEPS),),
    )


@pytest.fixture
def relaxing_example() -> ProcessExample:
    return ProcessExample(
        Process("have a relaxing evening"),
        (SubEventSequence.from_texts(RELAXING_EVENING_STEPS),),
    )


@pytest.fixture
def cook_eggs_generator() -> ScriptedGenerator:
    return ScriptedGenerator(chain_script("cook eggs", COOK_EGGS_STEPS))


@pytest.fixture
def fixture_dataset_dir() -> Path:
    return FIXTURE_DATA_DIR
