from __future__ import annotations

from procwriter.data import load_dataset
from procwriter.tokenization import split_tokens
from procwriter.toycorpus import THEMES, build_toy_corpus, write_toy_corpus

FUNCTION_WORDS = {
    "how", "to", "the", "a", "in", "into", "its", "with", "on", "onto", "until",
    "for", "and", "by", "of", "near", "out", "down", "once", "more", ".", ",", "?",
}


class TestToyCorpus:
    def test_split_sizes(self):
        train, valid, test = build_toy_corpus(seed=0)
        assert len(train) == len(THEMES) * 19
        assert len(valid) == len(THEMES) * 3
        assert len(test) == len(THEMES) * 3

    def test_theme_content_vocabularies_are_disjoint(self):
        vocabularies = {}
        for theme in THEMES:
            tokens: set[str] = set()
            filler_a = " ".join(theme.adjectives)
            filler_b = " ".join(theme.nouns)
            for text in (theme.title_template,) + theme.short_steps + theme.long_steps:
                tokens |= set(split_tokens(text.format(a=filler_a, b=filler_b)))
            vocabularies[theme.name] = tokens - FUNCTION_WORDS
        names = list(vocabularies)
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                assert not vocabularies[names[i]] & vocabularies[names[j]]

    def test_each_process_has_short_and_long_reference(self):
        train, _, _ = build_toy_corpus(seed=0)
        for example in train:
            lengths = sorted(len(ref) for ref in example.references)
            assert lengths == [4, 6]

    def test_held_out_titles_recombine_training_values(self):
        train, valid, test = build_toy_corpus(seed=0)
        train_titles = {ex.process.title for ex in train}
        train_tokens = set()
        for title in train_titles:
            train_tokens |= set(title.split())
        for example in list(valid) + list(test):
            assert example.process.title not in train_titles
            assert set(example.process.title.split()) <= train_tokens

    def test_deterministic(self):
        assert build_toy_corpus(seed=3) == build_toy_corpus(seed=3)
        assert build_toy_corpus(seed=3) != build_toy_corpus(seed=4)

    def test_write_and_reload(self, tmp_path):
        paths = write_toy_corpus(tmp_path, seed=0)
        train, valid, test = build_toy_corpus(seed=0)
        assert load_dataset(paths["train"]) == train
        assert load_dataset(paths["valid"]) == valid
        assert load_dataset(paths["test"]) == test
