from __future__ import annotations

import pytest

from procwriter.backends import TrainingConfig, create_backend
from procwriter.errors import BackendError
from procwriter.prompting import TrainingPair
from procwriter.tiny_seq2seq import TinyModelConfig, TinySeq2Seq

MICRO_PAIRS = [
    TrainingPair("How to cool down? Step 1: [M]", "Open the window."),
    TrainingPair("How to cool down? Step 1: Open the window. Step 2: [M]", "none"),
    TrainingPair("How to warm up? Step 1: [M]", "Close the window."),
    TrainingPair("How to warm up? Step 1: Close the window. Step 2: [M]", "none"),
]


@pytest.fixture(scope="module")
def trained() -> TinySeq2Seq:
    generator = TinySeq2Seq(TinyModelConfig(embedding_dim=32, hidden_dim=48, beam_width=4))
    return generator.fine_tune(MICRO_PAIRS, TrainingConfig(learning_rate=5e-3, epochs=60, seed=0))


class TestTinySeq2Seq:
    def test_memorizes_micro_corpus(self, trained):
        top = trained.topk("How to cool down? Step 1: [M]", 1)[0]
        assert top.text == "Open the window."
        top = trained.topk("How to warm up? Step 1: [M]", 1)[0]
        assert top.text == "Close the window."
        top = trained.topk("How to cool down? Step 1: Open the window. Step 2: [M]", 1)[0]
        assert top.text == "none"

    def test_candidates_sorted_distinct_nonpositive(self, trained):
        candidates = trained.topk("How to cool down? Step 1: [M]", 4)
        assert all(c.logprob <= 0.0 for c in candidates)
        texts = [c.text for c in candidates]
        assert len(set(texts)) == len(texts)
        logprobs = [c.logprob for c in candidates]
        assert logprobs == sorted(logprobs, reverse=True)

    def test_topk_prefix_property(self, trained):
        prompt = "How to cool down? Step 1: [M]"
        wide = trained.topk(prompt, 4)
        for k in range(1, 5):
            assert trained.topk(prompt, k) == wide[:k]

    def test_deterministic_training(self):
        config = TrainingConfig(learning_rate=5e-3, epochs=20, seed=11)
        model_config = TinyModelConfig(embedding_dim=16, hidden_dim=24, beam_width=3)
        a = TinySeq2Seq(model_config).fine_tune(MICRO_PAIRS, config)
        b = TinySeq2Seq(model_config).fine_tune(MICRO_PAIRS, config)
        prompt = "How to cool down? Step 1: [M]"
        assert a.topk(prompt, 3) == b.topk(prompt, 3)

    def test_untrained_topk_raises(self):
        with pytest.raises(BackendError, match="fine-tuned"):
            TinySeq2Seq().topk("How to x? Step 1: [M]", 1)

    def test_empty_pairs_rejected(self):
        with pytest.raises(ValueError):
            TinySeq2Seq().fine_tune([], TrainingConfig())

    def test_save_load_round_trip(self, trained, tmp_path):
        path = trained.save(tmp_path / "model.ckpt")
        loaded = TinySeq2Seq.load(path)
        prompt = "How to warm up? Step 1: [M]"
        assert loaded.topk(prompt, 3) == trained.topk(prompt, 3)

    def test_registry_constructs_with_params(self):
        generator = create_backend("tiny-seq2seq", {"hidden_dim": 24, "embedding_dim": 16})
        assert isinstance(generator, TinySeq2Seq)
        assert generator.config.hidden_dim == 24

    def test_mask_token(self, trained):
        assert trained.mask_token == "[M]"
