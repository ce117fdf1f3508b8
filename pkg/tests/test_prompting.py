from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from procwriter.data import Process, ProcessExample, SubEventSequence
from procwriter.errors import PromptParseError
from procwriter.prompting import (
    DEFAULT_TEMPLATE,
    PromptTemplate,
    TrainingPair,
    expand_training_pairs,
    parse_coherence_text,
    parse_prompt,
    render_coherence_text,
    render_prompt,
)

from conftest import BUY_A_HOUSE_STEPS, COOK_EGGS_STEPS


class TestRenderPrompt:
    def test_empty_prior(self):
        prompt = render_prompt(Process("cook eggs"), SubEventSequence())
        assert prompt == "How to cook eggs? Step 1: [M]"

    def test_one_step_prior(self):
        prompt = render_prompt(
            Process("cook eggs"), SubEventSequence.from_texts(COOK_EGGS_STEPS[:1])
        )
        assert prompt == (
            "How to cook eggs? Step 1: Place eggs in a pot of water. Step 2: [M]"
        )

    def test_three_step_prior(self):
        prompt = render_prompt(
            Process("buy a house"), SubEventSequence.from_texts(BUY_A_HOUSE_STEPS)
        )
        assert prompt == (
            "How to buy a house? Step 1: Getting your financials in order. "
            "Step 2: Shopping for a home. Step 3: Making an offer and finalizing the deal. "
            "Step 4: [M]"
        )

    def test_backend_specific_mask(self):
        template = PromptTemplate(mask_token="<extra_id_0>")
        prompt = render_prompt(Process("cook eggs"), SubEventSequence(), template)
        assert prompt.endswith("Step 1: <extra_id_0>")


class TestRenderCoherenceText:
    def test_three_steps(self):
        steps = SubEventSequence.from_texts(
            ["Cut out a heart shape.", "Glue the heart to a card base.", "Add embellishments."]
        )
        text = render_coherence_text(Process("make a felt heart card"), steps)
        assert text == (
            "How to make a felt heart card? Step 1: Cut out a heart shape. "
            "Step 2: Glue the heart to a card base. Step 3: Add embellishments."
        )

    def test_single_step(self):
        text = render_coherence_text(
            Process("cook eggs"), SubEventSequence.from_texts(COOK_EGGS_STEPS[:1])
        )
        assert text == "How to cook eggs? Step 1: Place eggs in a pot of water."

    def test_empty_steps_error(self):
        with pytest.raises(ValueError):
            render_coherence_text(Process("cook eggs"), SubEventSequence())

    def test_relation_to_render_prompt(self):
        process = Process("buy a house")
        steps = SubEventSequence.from_texts(BUY_A_HOUSE_STEPS)
        assert render_prompt(process, steps) == (
            render_coherence_text(process, steps) + f" Step {len(steps) + 1}: [M]"
        )


class TestExpandTrainingPairs:
    def test_cook_eggs_yields_four_pairs(self, cook_eggs_example):
        pairs = expand_training_pairs(cook_eggs_example)
        assert len(pairs) == 4
        assert pairs[0].input_text == "How to cook eggs? Step 1: [M]"
        assert pairs[0].target_text == COOK_EGGS_STEPS[0]
        assert pairs[-1].target_text == "none"
        assert pairs[-1].input_text.endswith("Step 4: [M]")

    def test_single_step_reference_yields_two_pairs(self):
        example = ProcessExample(
            Process("water a plant"), (SubEventSequence.from_texts(["Pour water slowly."]),)
        )
        assert len(expand_training_pairs(example)) == 2

    def test_two_references_concatenate_in_order(self):
        example = ProcessExample(
            Process("pack a bag"),
            (
                SubEventSequence.from_texts(["Fold the clothes.", "Zip the bag."]),
                SubEventSequence.from_texts(["Make a list.", "Gather items.", "Pack them."]),
            ),
        )
        pairs = expand_training_pairs(example)
        assert len(pairs) == 3 + 4
        assert pairs[2].target_text == "none"
        assert pairs[3].target_text == "Make a list."

    def test_pair_inputs_match_render_prompt_prefixes(self, cook_eggs_example):
        pairs = expand_training_pairs(cook_eggs_example)
        reference = cook_eggs_example.references[0]
        for i, pair in enumerate(pairs):
            prior = SubEventSequence(reference.events[: min(i, len(reference))])
            assert pair.input_text == render_prompt(cook_eggs_example.process, prior)

    def test_training_pair_rejects_empty_target(self):
        with pytest.raises(ValueError):
            TrainingPair("How to x? Step 1: [M]", "  ")


safe_text = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Nd"), max_codepoint=0x7F),
    min_size=1,
    max_size=12,
).filter(lambda s: s.strip() and s.strip().lower() != "none")


class TestParseBack:
    @settings(max_examples=80, deadline=None)
    @given(title=safe_text, steps=st.lists(safe_text, max_size=5))
    def test_prompt_round_trip(self, title, steps):
        process = Process(title)
        prior = SubEventSequence.from_texts(steps)
        parsed = parse_prompt(render_prompt(process, prior))
        assert parsed.title == title
        assert list(parsed.step_texts) == steps
        assert parsed.has_mask

    @settings(max_examples=40, deadline=None)
    @given(title=safe_text, steps=st.lists(safe_text, min_size=1, max_size=5))
    def test_coherence_round_trip(self, title, steps):
        process = Process(title)
        parsed = parse_coherence_text(render_coherence_text(process, SubEventSequence.from_texts(steps)))
        assert parsed.title == title
        assert list(parsed.step_texts) == steps
        assert not parsed.has_mask

    def test_step_label_collision_is_detected(self):
        # A step containing the label pattern breaks numbering and must error.
        text = "How to x? Step 1: alpha Step 9: beta Step 2: [M]"
        with pytest.raises(PromptParseError, match="numbering"):
            parse_prompt(text)

    def test_malformed_question_is_detected(self):
        with pytest.raises(PromptParseError):
            parse_prompt("What about x? Step 1: [M]")

    def test_coherence_parser_rejects_masked_text(self):
        prompt = render_prompt(Process("cook eggs"), SubEventSequence())
        with pytest.raises(PromptParseError, match="mask"):
            parse_coherence_text(prompt)
