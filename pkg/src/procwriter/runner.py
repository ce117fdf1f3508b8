"""Experiment orchestration: configure, train, decode, evaluate, persist.

Every run writes an immutable timestamped directory containing the resolved
configuration, predictions JSONL, a metrics JSON, an optional decode trace,
and a run-state file that marks the failed stage when something breaks.
With deterministic backends, identical configuration and seed produce
byte-identical predictions.

Set the ``PROCWRITER_CACHE`` environment variable to a directory to reuse
fine-tuned generator weights across runs that share a training signature.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import logging
import os
import time
import uuid
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .backends import BACKENDS, GeneratorContract, TrainingConfig, create_backend, fine_tune
from .baselines import all_at_once_decode, make_all_at_once_pairs, top1_similar, zero_shot_decode
from .coherence import (
    SCORERS,
    CoherenceScorerContract,
    build_coherence_dataset,
    create_scorer,
)
from .data import SPLIT_NAMES, DatasetSplit, SubEventSequence, load_dataset, subsample_fewshot
from .decoder import DecodingConfig, decode
from .embedding import EMBEDDERS, EmbeddingContract, create_embedder
from .errors import ConfigError
from .metrics import MetricReport, corpus_report
from .prompting import PromptTemplate, TrainingPair, expand_training_pairs

log = logging.getLogger("procwriter.runner")

METHODS = ("subeventwriter", "all-at-once", "top1-similar", "zero-shot")
CACHE_ENV_VAR = "PROCWRITER_CACHE"

_TRAINING_METHODS = ("subeventwriter", "all-at-once")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs. ``None`` means "not set, use the default"."""

    dataset_dir: str
    method: str = "subeventwriter"
    split: str = "test"
    backend: Optional[str] = None
    scorer: Optional[str] = None
    embedder: str = "hash"
    k: Optional[int] = None
    lambda_weight: Optional[float] = None
    max_steps: Optional[int] = None
    use_coherence: bool = True
    rerank_stop: bool = True
    stop_literal: str = "none"
    epochs: Optional[int] = None
    learning_rate: Optional[float] = None
    batch_size: Optional[int] = None
    n_negatives: Optional[int] = None
    fewshot: Optional[int] = None
    seed: int = 0
    out_dir: str = "runs"
    trace: bool = False
    select_checkpoint: bool = True

    def resolved(self) -> tuple["RunConfig", list[str]]:
        """Fill defaults, validate, and collect inapplicable-flag warnings."""
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.split not in SPLIT_NAMES:
            raise ConfigError(f"unknown split {self.split!r}; expected one of {SPLIT_NAMES}")
        warnings: list[str] = []
        decoder_only = {
            "k": self.k,
            "lambda": self.lambda_weight,
            "max-steps": self.max_steps,
            "n-negatives": self.n_negatives,
            "scorer": self.scorer,
        }
        if self.method != "subeventwriter":
            for flag, value in decoder_only.items():
                if value is not None:
                    warnings.append(f"{flag} is ignored for method {self.method!r}")
            if self.trace:
                warnings.append(f"trace is ignored for method {self.method!r}")
            if not self.use_coherence:
                warnings.append(f"no-coherence is ignored for method {self.method!r}")
        if self.method not in _TRAINING_METHODS:
            for flag, value in (
                ("epochs", self.epochs),
                ("lr", self.learning_rate),
                ("batch-size", self.batch_size),
            ):
                if value is not None:
                    warnings.append(f"{flag} is ignored for method {self.method!r}")
        if self.method == "zero-shot" and self.fewshot is not None:
            warnings.append("fewshot is ignored for method 'zero-shot'")
        if self.method == "top1-similar" and self.backend is not None:
            warnings.append("backend is ignored for method 'top1-similar'")

        resolved = replace(
            self,
            k=self.k if self.k is not None else 5,
            lambda_weight=self.lambda_weight if self.lambda_weight is not None else 1.0,
            max_steps=self.max_steps if self.max_steps is not None else 20,
            epochs=self.epochs if self.epochs is not None else 4,
            learning_rate=self.learning_rate if self.learning_rate is not None else 3e-3,
            batch_size=self.batch_size if self.batch_size is not None else 32,
            n_negatives=self.n_negatives if self.n_negatives is not None else 2,
            scorer=self.scorer
            if self.scorer is not None
            else ("logistic" if self.method == "subeventwriter" and self.use_coherence else None),
        )
        if resolved.lambda_weight < 0.0:
            raise ConfigError("lambda must be non-negative")
        if resolved.learning_rate <= 0.0:
            raise ConfigError("learning rate must be positive")
        if resolved.k < 1 or resolved.max_steps < 1 or resolved.n_negatives < 1:
            raise ConfigError("k, max-steps, and n-negatives must be at least 1")
        if resolved.epochs < 1 or resolved.batch_size < 1:
            raise ConfigError("epochs and batch-size must be at least 1")
        if resolved.fewshot is not None and resolved.fewshot < 0:
            raise ConfigError("fewshot must be non-negative")
        return resolved, warnings

    def to_flat_dict(self) -> dict[str, object]:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class RunResult:
    report: MetricReport
    run_dir: Path
    predictions_path: Path


@dataclass(frozen=True)
class GridCell:
    config: RunConfig
    report: MetricReport
    score: float


class _StageTracker:
    """Writes run-state.json so a crashed run names its failing stage."""

    def __init__(self, path: Path):
        self.path = path

    def _write(self, stage: str, status: str, error: str | None) -> None:
        payload = {"stage": stage, "status": status, "error": error}
        self.path.write_text(json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8")

    def run(self, stage: str):
        tracker = self

        class _Stage:
            def __enter__(self):
                tracker._write(stage, "running", None)

            def __exit__(self, exc_type, exc, tb):
                if exc is None:
                    tracker._write(stage, "completed", None)
                else:
                    tracker._write(stage, "failed", f"{type(exc).__name__}: {exc}")
                return False

        return _Stage()


def cache_dir() -> Optional[Path]:
    value = os.environ.get(CACHE_ENV_VAR)
    return Path(value) if value else None


def _training_signature(
    config: RunConfig, backend_params: Mapping[str, object], pairs: Sequence[TrainingPair]
) -> str:
    digest = hashlib.sha256()
    payload = {
        "backend": config.backend,
        "backend_params": dict(sorted((str(k), str(v)) for k, v in backend_params.items())),
        "method": config.method,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "seed": config.seed,
        "select_checkpoint": config.select_checkpoint,
    }
    digest.update(json.dumps(payload, sort_keys=True).encode("utf-8"))
    for pair in pairs:
        digest.update(pair.input_text.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(pair.target_text.encode("utf-8"))
        digest.update(b"\x01")
    return digest.hexdigest()


def _make_run_dir(out_dir: str | Path) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    run_dir = Path(out_dir) / f"run-{stamp}-{uuid.uuid4().hex[:8]}"
    run_dir.mkdir(parents=True, exist_ok=False)
    return run_dir


def _write_config_snapshot(config: RunConfig, path: Path) -> None:
    lines = []
    for key, value in sorted(config.to_flat_dict().items()):
        lines.append(f"{key} = {value if value is not None else 'none'}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_split(config: RunConfig, name: str) -> DatasetSplit:
    return load_dataset(Path(config.dataset_dir) / f"{name}.jsonl", name=name)


def _maybe_load_split(config: RunConfig, name: str) -> Optional[DatasetSplit]:
    path = Path(config.dataset_dir) / f"{name}.jsonl"
    return load_dataset(path, name=name) if path.is_file() else None


def run_experiment(
    config: RunConfig,
    *,
    generator: Optional[GeneratorContract] = None,
    scorer: Optional[CoherenceScorerContract] = None,
    embedder: Optional[EmbeddingContract] = None,
    backend_params: Optional[Mapping[str, object]] = None,
    _generator_memo: Optional[dict[str, GeneratorContract]] = None,
) -> RunResult:
    """Run one experiment end to end and persist its artifacts.

    ``generator`` / ``scorer`` / ``embedder`` instances may be injected for
    testing; injected scorers are used as-is (no coherence data is built).
    """
    config, warnings = config.resolved()
    for message in warnings:
        log.warning(message)
    backend_params = dict(backend_params or {})

    # Fail on unknown names before any work happens.
    needs_generator = config.method in ("subeventwriter", "all-at-once", "zero-shot")
    if needs_generator and generator is None:
        if config.backend is None:
            raise ConfigError(f"method {config.method!r} requires a backend")
        if config.backend not in BACKENDS:
            raise ConfigError(
                f"unknown backend {config.backend!r}; registered: {sorted(BACKENDS)}"
            )
    needs_scorer = config.method == "subeventwriter" and config.use_coherence
    if needs_scorer and scorer is None and config.scorer not in SCORERS:
        raise ConfigError(f"unknown scorer {config.scorer!r}; registered: {sorted(SCORERS)}")
    if embedder is None:
        if config.embedder not in EMBEDDERS:
            raise ConfigError(
                f"unknown embedder {config.embedder!r}; registered: {sorted(EMBEDDERS)}"
            )
        embedder = create_embedder(config.embedder)

    run_dir = _make_run_dir(config.out_dir)
    _write_config_snapshot(config, run_dir / "config.txt")
    tracker = _StageTracker(run_dir / "run-state.json")

    with tracker.run("load-data"):
        eval_split = _load_split(config, config.split)
        train_split = None
        if config.method != "zero-shot":
            train_split = _load_split(config, "train")
            if config.fewshot is not None:
                train_split = subsample_fewshot(train_split, config.fewshot, config.seed)
                log.info("few-shot: training restricted to exactly %d rows", len(train_split))
        valid_split = _maybe_load_split(config, "valid") if config.select_checkpoint else None

    with tracker.run("prepare-generator"):
        if needs_generator:
            if generator is None:
                generator = create_backend(config.backend, backend_params)
            if config.method in _TRAINING_METHODS:
                generator = _prepare_trained_generator(
                    config, generator, backend_params, train_split, valid_split, embedder,
                    _generator_memo,
                )

    with tracker.run("prepare-scorer"):
        if needs_scorer and scorer is None:
            scorer = create_scorer(config.scorer)
            coherence_examples = build_coherence_dataset(
                train_split, config.n_negatives, config.seed
            )
            scorer.train(coherence_examples, {"n_negatives": config.n_negatives})

    with tracker.run("decode"):
        rows, traces = _predict_split(config, eval_split, generator, scorer, embedder, train_split)

    with tracker.run("evaluate"):
        predictions = [SubEventSequence.from_texts(row["prediction"]) for row in rows]
        report = corpus_report(predictions, list(eval_split.examples), embedder)

    with tracker.run("persist"):
        predictions_path = run_dir / "predictions.jsonl"
        with predictions_path.open("w", encoding="utf-8") as handle:
            for row in rows:
                handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
        (run_dir / "metrics.json").write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        if config.trace and config.method == "subeventwriter":
            with (run_dir / "trace.jsonl").open("w", encoding="utf-8") as handle:
                for trace_row in traces:
                    handle.write(json.dumps(trace_row, ensure_ascii=False, sort_keys=True) + "\n")

    return RunResult(report=report, run_dir=run_dir, predictions_path=predictions_path)


def _prepare_trained_generator(
    config: RunConfig,
    generator: GeneratorContract,
    backend_params: Mapping[str, object],
    train_split: DatasetSplit,
    valid_split: Optional[DatasetSplit],
    embedder: EmbeddingContract,
    memo: Optional[dict[str, GeneratorContract]],
) -> GeneratorContract:
    template = PromptTemplate(mask_token=generator.mask_token, stop_literal=config.stop_literal)
    if config.method == "subeventwriter":
        pairs = [p for ex in train_split for p in expand_training_pairs(ex, template)]
    else:
        pairs = [p for ex in train_split for p in make_all_at_once_pairs(ex)]
    signature = _training_signature(config, backend_params, pairs)

    if memo is not None and signature in memo:
        return memo[signature]
    cache = cache_dir()
    cache_path = cache / f"{signature}.ckpt" if cache else None
    if cache_path is not None and cache_path.is_file() and hasattr(type(generator), "load"):
        log.info("loading cached generator weights from %s", cache_path)
        generator = type(generator).load(cache_path)
    else:
        select_by = None
        if config.select_checkpoint and valid_split is not None and len(valid_split) > 0:
            select_by = _make_selection_hook(config, valid_split, embedder, template)
        training = TrainingConfig(
            learning_rate=config.learning_rate,
            batch_size=config.batch_size,
            epochs=config.epochs,
            seed=config.seed,
        )
        generator = fine_tune(generator, pairs, training, select_by=select_by)
        if cache_path is not None and hasattr(generator, "save"):
            cache_path.parent.mkdir(parents=True, exist_ok=True)
            generator.save(cache_path)
    if memo is not None:
        memo[signature] = generator
    return generator


def _make_selection_hook(
    config: RunConfig,
    valid_split: DatasetSplit,
    embedder: EmbeddingContract,
    template: PromptTemplate,
):
    """Checkpoint criterion: sum of the text metrics on validation predictions.

    Validation decoding runs without the coherence scorer (greedy top-1) so
    checkpoint quality reflects the generator alone.
    """

    def hook(candidate_generator: GeneratorContract) -> float:
        predictions = []
        for example in valid_split:
            if config.method == "subeventwriter":
                sequence, _ = decode(
                    example.process,
                    candidate_generator,
                    None,
                    DecodingConfig(
                        k=1,
                        lambda_weight=0.0,
                        max_steps=config.max_steps,
                        use_coherence=False,
                        stop_literal=config.stop_literal,
                    ),
                    template,
                )
            else:
                sequence = all_at_once_decode(example.process, candidate_generator)
            predictions.append(sequence)
        return corpus_report(predictions, list(valid_split.examples), embedder).text_metric_sum()

    return hook


def _predict_split(
    config: RunConfig,
    eval_split: DatasetSplit,
    generator: Optional[GeneratorContract],
    scorer: Optional[CoherenceScorerContract],
    embedder: EmbeddingContract,
    train_split: Optional[DatasetSplit],
) -> tuple[list[dict], list[dict]]:
    rows: list[dict] = []
    traces: list[dict] = []
    if config.method == "subeventwriter":
        template = PromptTemplate(mask_token=generator.mask_token, stop_literal=config.stop_literal)
        decoding = DecodingConfig(
            k=config.k,
            lambda_weight=config.lambda_weight,
            max_steps=config.max_steps,
            use_coherence=config.use_coherence,
            rerank_stop=config.rerank_stop,
            stop_literal=config.stop_literal,
        )
        for example in eval_split:
            sequence, trace = decode(example.process, generator, scorer, decoding, template)
            rows.append(
                {
                    "process": example.process.title,
                    "prediction": sequence.texts(),
                    "stop_reason": trace.stop_reason,
                }
            )
            if config.trace:
                traces.append({"process": example.process.title, **trace.to_dict()})
    elif config.method == "all-at-once":
        for example in eval_split:
            sequence = all_at_once_decode(example.process, generator)
            rows.append(
                {"process": example.process.title, "prediction": sequence.texts(), "stop_reason": None}
            )
    elif config.method == "top1-similar":
        for i, example in enumerate(eval_split):
            sequence = top1_similar(example.process, train_split, embedder, config.seed + i)
            rows.append(
                {"process": example.process.title, "prediction": sequence.texts(), "stop_reason": None}
            )
    elif config.method == "zero-shot":
        for example in eval_split:
            sequence = zero_shot_decode(example.process, generator)
            rows.append(
                {"process": example.process.title, "prediction": sequence.texts(), "stop_reason": None}
            )
    else:  # pragma: no cover - resolved() already validated
        raise ConfigError(f"unknown method {config.method!r}")
    return rows, traces


def grid_search(
    base: RunConfig,
    grid: Mapping[str, Sequence[object]],
    *,
    generator: Optional[GeneratorContract] = None,
    scorer: Optional[CoherenceScorerContract] = None,
    embedder: Optional[EmbeddingContract] = None,
    backend_params: Optional[Mapping[str, object]] = None,
) -> tuple[RunConfig, list[GridCell]]:
    """Evaluate the config cross-product on the validation split.

    Selects the argmax of the four-text-metric sum, ties broken by
    enumeration order; the winner is returned with the base split restored.
    An empty grid returns the base unchanged. The test split is never read.
    """
    field_names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(grid) - field_names
    if unknown:
        raise ConfigError(f"grid fields not in RunConfig: {sorted(unknown)}")
    if not grid:
        return base, []
    memo: dict[str, GeneratorContract] = {}
    cells: list[GridCell] = []
    names = list(grid.keys())
    for index, combo in enumerate(itertools.product(*(grid[name] for name in names))):
        overrides = dict(zip(names, combo))
        cell_config = replace(
            base,
            split="valid",
            out_dir=str(Path(base.out_dir) / "grid" / f"cell-{index:03d}"),
            **overrides,
        )
        result = run_experiment(
            cell_config,
            generator=generator,
            scorer=scorer,
            embedder=embedder,
            backend_params=backend_params,
            _generator_memo=memo,
        )
        cells.append(
            GridCell(config=cell_config, report=result.report, score=result.report.text_metric_sum())
        )
    best = cells[0]
    for cell in cells[1:]:
        if cell.score > best.score:
            best = cell
    winner = replace(best.config, split=base.split, out_dir=base.out_dir)
    return winner, cells
