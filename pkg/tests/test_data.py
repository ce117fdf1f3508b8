from __future__ import annotations

import json

import pytest

from procwriter.data import (
    DatasetSplit,
    Process,
    ProcessExample,
    SubEvent,
    SubEventSequence,
    is_stop_literal,
    load_dataset,
    save_dataset,
    subsample_fewshot,
)
from procwriter.errors import DatasetError


def write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


COOK_EGGS_RECORD = {
    "process": "cook eggs",
    "references": [
        [
            "Place eggs in a pot of water.",
            "Bring the water to a boil.",
            "Turn off the heat and place the eggs in cold water.",
        ]
    ],
}


class TestTypes:
    def test_process_title_must_be_non_empty(self):
        with pytest.raises(ValueError):
            Process("   ")

    def test_sub_event_rejects_stop_literal_case_insensitively(self):
        for text in ("none", "None", " NONE "):
            with pytest.raises(ValueError):
                SubEvent(text)

    def test_sub_event_rejects_empty(self):
        with pytest.raises(ValueError):
            SubEvent(" \t ")

    def test_is_stop_literal(self):
        assert is_stop_literal(" None\n")
        assert not is_stop_literal("nones")

    def test_example_requires_references(self):
        with pytest.raises(ValueError):
            ProcessExample(Process("x"), ())

    def test_reference_must_have_a_step(self):
        with pytest.raises(ValueError):
            ProcessExample(Process("x"), (SubEventSequence(),))

    def test_split_name_restricted(self):
        with pytest.raises(ValueError):
            DatasetSplit("dev")

    def test_empty_sequence_is_representable(self):
        assert len(SubEventSequence()) == 0


class TestLoadDataset:
    def test_cook_eggs_record(self, tmp_path):
        path = tmp_path / "train.jsonl"
        write_jsonl(path, [COOK_EGGS_RECORD])
        split = load_dataset(path)
        assert split.name == "train"
        assert len(split) == 1
        example = split.examples[0]
        assert example.process.title == "cook eggs"
        assert len(example.references) == 1
        assert example.references[0].texts() == COOK_EGGS_RECORD["references"][0]

    def test_empty_reference_list_is_record_level_error(self, tmp_path):
        path = tmp_path / "train.jsonl"
        write_jsonl(path, [{"process": "x", "references": []}])
        with pytest.raises(DatasetError, match=r":1: .*references"):
            load_dataset(path)

    def test_empty_file_gives_empty_split(self, tmp_path):
        path = tmp_path / "test.jsonl"
        path.write_text("", encoding="utf-8")
        assert len(load_dataset(path)) == 0

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "train.jsonl"
        path.write_text('{"process": "a", "references": [["x"]]}\n{oops\n', encoding="utf-8")
        with pytest.raises(DatasetError, match=r":2:"):
            load_dataset(path)

    def test_wrong_field_type_names_field(self, tmp_path):
        path = tmp_path / "train.jsonl"
        write_jsonl(path, [{"process": 3, "references": [["x"]]}])
        with pytest.raises(DatasetError, match="process"):
            load_dataset(path)

    def test_stop_literal_step_rejected_at_load(self, tmp_path):
        path = tmp_path / "train.jsonl"
        write_jsonl(path, [{"process": "a", "references": [["x", "None"]]}])
        with pytest.raises(DatasetError, match="stop literal"):
            load_dataset(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            load_dataset(tmp_path / "train.jsonl")

    def test_unknown_schema(self, tmp_path):
        with pytest.raises(DatasetError, match="schema"):
            load_dataset(tmp_path / "train.jsonl", schema="csv")

    def test_round_trip(self, tmp_path):
        path = tmp_path / "valid.jsonl"
        write_jsonl(
            path,
            [
                COOK_EGGS_RECORD,
                {"process": "tie a tie", "references": [["Cross the wide end."], ["Loop it."]]},
            ],
        )
        split = load_dataset(path)
        save_dataset(split, tmp_path / "copy" / "valid.jsonl")
        assert load_dataset(tmp_path / "copy" / "valid.jsonl") == split

    def test_fixture_corpus_loads(self, fixture_dataset_dir):
        for name in ("train", "valid", "test"):
            split = load_dataset(fixture_dataset_dir / f"{name}.jsonl")
            assert len(split) > 0


class TestSubsampleFewshot:
    def _split(self, size: int) -> DatasetSplit:
        examples = tuple(
            ProcessExample(Process(f"task {i}"), (SubEventSequence.from_texts([f"do {i}"]),))
            for i in range(size)
        )
        return DatasetSplit("train", examples)

    def test_identity_when_n_equals_size(self):
        split = self._split(7)
        assert subsample_fewshot(split, 7, seed=3) == split

    def test_zero_gives_empty_split(self):
        assert len(subsample_fewshot(self._split(5), 0, seed=0)) == 0

    def test_error_when_n_exceeds_size(self):
        with pytest.raises(DatasetError):
            subsample_fewshot(self._split(3), 4, seed=0)

    def test_deterministic_subset_preserving_order(self):
        split = self._split(50)
        sample_a = subsample_fewshot(split, 20, seed=11)
        sample_b = subsample_fewshot(split, 20, seed=11)
        assert sample_a == sample_b
        positions = [split.examples.index(ex) for ex in sample_a.examples]
        assert positions == sorted(positions)
        assert set(sample_a.examples) <= set(split.examples)

    def test_idempotent_under_same_seed(self):
        split = self._split(30)
        once = subsample_fewshot(split, 30, seed=5)
        assert subsample_fewshot(once, 30, seed=5) == once

    def test_different_seeds_differ_eventually(self):
        split = self._split(40)
        samples = {tuple(subsample_fewshot(split, 10, seed=s).examples) for s in range(5)}
        assert len(samples) > 1

    def test_fullscale_train_split_subsample(self):
        example = ProcessExample(Process("task"), (SubEventSequence.from_texts(["do it"]),))
        split = DatasetSplit("train", (example,) * 73847)
        sampled = subsample_fewshot(split, 5000, seed=0)
        assert len(sampled) == 5000
