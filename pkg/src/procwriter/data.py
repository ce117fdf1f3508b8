"""Domain types, dataset ingestion, and few-shot subsampling.

A dataset is JSONL, one record per line:

    {"process": "<title>", "references": [["<step>", ...], ...]}

All types here are immutable values; loading is single-threaded per file.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DatasetError

STOP_LITERAL = "none"

SPLIT_NAMES = ("train", "valid", "test")


def is_stop_literal(text: str, stop: str = STOP_LITERAL) -> bool:
    """True when *text* is the reserved stop signal (trimmed, case-insensitive)."""
    return text.strip().lower() == stop


@dataclass(frozen=True)
class Process:
    """A free-text goal title, e.g. ``"cook eggs"``."""

    title: str

    def __post_init__(self) -> None:
        if not self.title.strip():
            raise ValueError("process title must be non-empty")


@dataclass(frozen=True)
class SubEvent:
    """One step of a process. Free text; never the reserved stop literal."""

    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("sub-event text must be non-empty")
        if is_stop_literal(self.text):
            raise ValueError(
                f"sub-event text must not equal the reserved stop literal {STOP_LITERAL!r}"
            )


@dataclass(frozen=True)
class SubEventSequence:
    """Temporally ordered steps. May be empty: a decode can stop immediately."""

    events: tuple[SubEvent, ...] = ()

    @classmethod
    def from_texts(cls, texts: Iterable[str]) -> "SubEventSequence":
        return cls(tuple(SubEvent(t) for t in texts))

    def texts(self) -> list[str]:
        return [e.text for e in self.events]

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[SubEvent]:
        return iter(self.events)

    def __getitem__(self, index: int) -> SubEvent:
        return self.events[index]


@dataclass(frozen=True)
class ProcessExample:
    """A process plus one or more reference step sequences (the dataset row)."""

    process: Process
    references: tuple[SubEventSequence, ...]

    def __post_init__(self) -> None:
        if not self.references:
            raise ValueError("a process example needs at least one reference")
        for ref in self.references:
            if len(ref) == 0:
                raise ValueError("every reference must contain at least one step")


@dataclass(frozen=True)
class DatasetSplit:
    """A named collection of examples. Titles need not be unique within a split."""

    name: str
    examples: tuple[ProcessExample, ...] = ()

    def __post_init__(self) -> None:
        if self.name not in SPLIT_NAMES:
            raise ValueError(f"split name must be one of {SPLIT_NAMES}, got {self.name!r}")

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[ProcessExample]:
        return iter(self.examples)


def example_to_record(example: ProcessExample) -> dict:
    return {
        "process": example.process.title,
        "references": [ref.texts() for ref in example.references],
    }


def example_from_record(record: dict) -> ProcessExample:
    """Build a :class:`ProcessExample` from a parsed JSONL record."""
    if not isinstance(record, dict):
        raise ValueError("record must be a JSON object")
    title = record.get("process")
    if not isinstance(title, str):
        raise ValueError("field 'process' must be a string")
    references = record.get("references")
    if not isinstance(references, list) or not references:
        raise ValueError("field 'references' must be a non-empty list of step lists")
    refs = []
    for ref in references:
        if not isinstance(ref, list) or not all(isinstance(s, str) for s in ref):
            raise ValueError("field 'references' must contain lists of strings")
        refs.append(SubEventSequence.from_texts(ref))
    return ProcessExample(process=Process(title), references=tuple(refs))


def load_dataset(path: str | Path, schema: str = "jsonl", name: str | None = None) -> DatasetSplit:
    """Load a dataset split from *path*.

    Records are returned in file order with reference texts preserved
    verbatim. Malformed records raise :class:`DatasetError` naming the line
    number; steps equal to the stop literal are rejected rather than escaped.
    """
    if schema != "jsonl":
        raise DatasetError(f"unknown dataset schema {schema!r}; only 'jsonl' is supported")
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file not found: {path}")
    split_name = name if name is not None else path.stem
    examples: list[ProcessExample] = []
    with path.open(encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            try:
                examples.append(example_from_record(record))
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
    return DatasetSplit(name=split_name, examples=tuple(examples))


def save_dataset(split: DatasetSplit, path: str | Path) -> Path:
    """Write *split* as JSONL; the inverse of :func:`load_dataset`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for example in split.examples:
            handle.write(json.dumps(example_to_record(example), ensure_ascii=False) + "\n")
    return path


def subsample_fewshot(split: DatasetSplit, n: int, seed: int) -> DatasetSplit:
    """Sample *n* examples uniformly without replacement, preserving order.

    Deterministic for a fixed seed; ``n == len(split)`` returns an equal split.
    """
    if n < 0 or n > len(split.examples):
        raise DatasetError(
            f"cannot subsample {n} examples from a split of size {len(split.examples)}"
        )
    indices = sorted(random.Random(seed).sample(range(len(split.examples)), n))
    return DatasetSplit(name=split.name, examples=tuple(split.examples[i] for i in indices))
