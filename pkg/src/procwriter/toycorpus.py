"""Synthetic process corpus with theme-disjoint content vocabularies.

Six hand-written activity themes, each a two-slot title template crossed
over five adjectives and five nouns (150 processes total). Every process
carries two references, a short and a long variant, instantiated from the
theme's step templates. Content words never cross themes, which makes the
corpus a clean testbed for coherence corruption: a borrowed step is
lexically foreign, a duplicated step is an exact repeat.

Splits are compositional: held-out processes recombine adjective and noun
values that both appear in training, just never together.
"""

from __future__ import annotations

import argparse
import random
from dataclasses import dataclass
from pathlib import Path

from .data import DatasetSplit, Process, ProcessExample, SubEventSequence, save_dataset


@dataclass(frozen=True)
class ThemeSpec:
    name: str
    title_template: str
    adjectives: tuple[str, ...]
    nouns: tuple[str, ...]
    short_steps: tuple[str, ...]
    long_steps: tuple[str, ...]


THEMES: tuple[ThemeSpec, ...] = (
    ThemeSpec(
        name="tea",
        title_template="brew {a} {b} tea",
        adjectives=("gentle", "strong", "fragrant", "mellow", "earthy"),
        nouns=("mint", "jasmine", "ginger", "hibiscus", "chamomile"),
        short_steps=(
            "Boil the water in a kettle.",
            "Add the {b} leaves to the pot.",
            "Steep for five minutes.",
            "Pour the tea into a cup.",
        ),
        long_steps=(
            "Rinse the kettle.",
            "Boil the water in a kettle.",
            "Warm the teapot.",
            "Add the {b} leaves to the pot.",
            "Steep until the {a} flavor develops.",
            "Pour the tea into a cup.",
        ),
    ),
    ThemeSpec(
        name="garden",
        title_template="plant {a} {b} seedlings",
        adjectives=("hardy", "dwarf", "climbing", "trailing", "sturdy"),
        nouns=("tomato", "pepper", "basil", "marigold", "zucchini"),
        short_steps=(
            "Dig a small hole in the bed.",
            "Place the {b} seedling inside.",
            "Cover the roots with soil.",
            "Moisten the bed slowly.",
        ),
        long_steps=(
            "Loosen the bed with a trowel.",
            "Mix compost into the bed.",
            "Dig a small hole in the bed.",
            "Place the {b} seedling inside.",
            "Cover the roots with soil.",
            "Mulch around the {a} stem.",
        ),
    ),
    ThemeSpec(
        name="bike",
        title_template="repair a {a} {b} bicycle",
        adjectives=("rusty", "vintage", "folding", "tandem", "battered"),
        nouns=("road", "mountain", "touring", "courier", "commuter"),
        short_steps=(
            "Flip the bicycle onto its saddle.",
            "Patch the {b} tire tube.",
            "Pump the tire to full pressure.",
            "Spin the wheel to check balance.",
        ),
        long_steps=(
            "Flip the bicycle onto its saddle.",
            "Remove the {b} wheel with a wrench.",
            "Patch the tire tube.",
            "Pump the tire to full pressure.",
            "Oil the {a} chain links.",
            "Spin the wheel to check balance.",
        ),
    ),
    ThemeSpec(
        name="mural",
        title_template="paint a {a} {b} mural",
        adjectives=("bold", "pastel", "abstract", "geometric", "vivid"),
        nouns=("ocean", "forest", "desert", "skyline", "meadow"),
        short_steps=(
            "Sketch the {b} scene on the wall.",
            "Prime the wall surface.",
            "Brush the colors onto the sketch.",
            "Seal the finished mural with varnish.",
        ),
        long_steps=(
            "Tape the edges of the wall.",
            "Sketch the {b} scene on the wall.",
            "Prime the wall surface.",
            "Brush the {a} colors onto the sketch.",
            "Blend the shading near the border.",
            "Seal the finished mural with varnish.",
        ),
    ),
    ThemeSpec(
        name="bread",
        title_template="bake {a} {b} bread",
        adjectives=("crusty", "airy", "dense", "braided", "seeded"),
        nouns=("rye", "sourdough", "walnut", "raisin", "olive"),
        short_steps=(
            "Knead the {b} dough until smooth.",
            "Let the dough rise in a bowl.",
            "Shape the loaf on a tray.",
            "Bake the loaf until golden.",
        ),
        long_steps=(
            "Dissolve the yeast overnight.",
            "Knead the {b} dough until smooth.",
            "Let the dough rise in a bowl.",
            "Fold down the dough once more.",
            "Shape the {a} loaf on a tray.",
            "Bake the loaf until golden.",
        ),
    ),
    ThemeSpec(
        name="robot",
        title_template="assemble a {a} {b} robot",
        adjectives=("agile", "solar", "remote", "modular", "nimble"),
        nouns=("wheeled", "walking", "crawling", "hopping", "rolling"),
        short_steps=(
            "Bolt the motors to the chassis.",
            "Wire the {b} drive circuits.",
            "Snap the battery into its slot.",
            "Flash the firmware and test.",
        ),
        long_steps=(
            "Sort the parts by size.",
            "Bolt the motors to the chassis.",
            "Wire the {b} drive circuits.",
            "Mount the {a} sensor array.",
            "Snap the battery into its slot.",
            "Flash the firmware and test.",
        ),
    ),
)


def _build_example(theme: ThemeSpec, adjective: str, noun: str) -> ProcessExample:
    title = theme.title_template.format(a=adjective, b=noun)
    short = [s.format(a=adjective, b=noun) for s in theme.short_steps]
    long = [s.format(a=adjective, b=noun) for s in theme.long_steps]
    return ProcessExample(
        process=Process(title),
        references=(
            SubEventSequence.from_texts(short),
            SubEventSequence.from_texts(long),
        ),
    )


def _split_combos(
    theme: ThemeSpec, seed: int, n_valid: int, n_test: int
) -> tuple[list[tuple[str, str]], list[tuple[str, str]], list[tuple[str, str]]]:
    combos = [(a, b) for a in theme.adjectives for b in theme.nouns]
    attempt = 0
    while True:
        shuffled = combos[:]
        # str seeds hash through sha512, stable across processes.
        random.Random(f"{seed}:{theme.name}:{attempt}").shuffle(shuffled)
        held_out = shuffled[: n_valid + n_test]
        train = shuffled[n_valid + n_test :]
        train_adjectives = {a for a, _ in train}
        train_nouns = {b for _, b in train}
        # Held-out combos must recombine values already seen in training.
        if train_adjectives == set(theme.adjectives) and train_nouns == set(theme.nouns):
            return train, held_out[:n_valid], held_out[n_valid : n_valid + n_test]
        attempt += 1


def build_toy_corpus(
    seed: int = 0, n_valid_per_theme: int = 3, n_test_per_theme: int = 3
) -> tuple[DatasetSplit, DatasetSplit, DatasetSplit]:
    """Build (train, valid, test) splits over all themes."""
    train_examples: list[ProcessExample] = []
    valid_examples: list[ProcessExample] = []
    test_examples: list[ProcessExample] = []
    for theme in THEMES:
        train, valid, test = _split_combos(theme, seed, n_valid_per_theme, n_test_per_theme)
        train_examples.extend(_build_example(theme, a, b) for a, b in train)
        valid_examples.extend(_build_example(theme, a, b) for a, b in valid)
        test_examples.extend(_build_example(theme, a, b) for a, b in test)
    return (
        DatasetSplit("train", tuple(train_examples)),
        DatasetSplit("valid", tuple(valid_examples)),
        DatasetSplit("test", tuple(test_examples)),
    )


def write_toy_corpus(out_dir: str | Path, seed: int = 0) -> dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {}
    for split in build_toy_corpus(seed):
        paths[split.name] = save_dataset(split, out_dir / f"{split.name}.jsonl")
    return paths


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Write the synthetic toy corpus as JSONL splits.")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    paths = write_toy_corpus(args.out, args.seed)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
