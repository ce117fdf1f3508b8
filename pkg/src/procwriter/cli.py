"""Command-line interface: run, grid, eval, synth-coherence."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .coherence import build_coherence_dataset, save_coherence_dataset
from .data import SubEventSequence, load_dataset
from .embedding import create_embedder
from .errors import ConfigError, DatasetError, ProcwriterError
from .metrics import corpus_report
from .runner import METHODS, GridCell, RunConfig, grid_search, run_experiment

_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}

_FIELD_PARSERS = {
    "dataset_dir": str,
    "method": str,
    "split": str,
    "backend": str,
    "scorer": str,
    "embedder": str,
    "k": int,
    "lambda_weight": float,
    "max_steps": int,
    "use_coherence": "bool",
    "rerank_stop": "bool",
    "stop_literal": str,
    "epochs": int,
    "learning_rate": float,
    "batch_size": int,
    "n_negatives": int,
    "fewshot": int,
    "seed": int,
    "out_dir": str,
    "trace": "bool",
    "select_checkpoint": "bool",
}


_OPTIONAL_FIELDS = {
    "backend", "scorer", "k", "lambda_weight", "max_steps", "epochs",
    "learning_rate", "batch_size", "n_negatives", "fewshot",
}


def _coerce(field: str, raw: str):
    if field not in _FIELD_PARSERS:
        raise ConfigError(f"unknown config key {field!r}")
    raw = raw.strip()
    # "none" only means null for optional fields; it is also the stop literal.
    if field in _OPTIONAL_FIELDS and raw.lower() in ("none", "null", ""):
        return None
    parser = _FIELD_PARSERS[field]
    if parser == "bool":
        if raw.lower() not in _BOOL_VALUES:
            raise ConfigError(f"cannot parse boolean value {raw!r} for {field}")
        return _BOOL_VALUES[raw.lower()]
    try:
        return parser(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse value {raw!r} for {field}: {exc}") from exc


def _read_flat_file(path: str | Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def parse_config_file(path: str | Path) -> RunConfig:
    entries = _read_flat_file(path)
    if "dataset_dir" not in entries:
        raise ConfigError(f"config file {path} must set dataset_dir")
    values = {key: _coerce(key, raw) for key, raw in entries.items()}
    return RunConfig(**values)  # type: ignore[arg-type]


def parse_grid_file(path: str | Path) -> dict[str, list]:
    entries = _read_flat_file(path)
    grid: dict[str, list] = {}
    for key, raw in entries.items():
        grid[key] = [_coerce(key, piece) for piece in raw.split(",")]
    return grid


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=METHODS, default="subeventwriter")
    parser.add_argument("--dataset", required=True, help="dataset directory with <split>.jsonl files")
    parser.add_argument("--split", default="test")
    parser.add_argument("--backend", default=None)
    parser.add_argument("--scorer", default=None)
    parser.add_argument("--k", type=int, default=None)
    parser.add_argument("--lambda", dest="lambda_weight", type=float, default=None)
    parser.add_argument("--max-steps", type=int, default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--lr", dest="learning_rate", type=float, default=None)
    parser.add_argument("--batch-size", type=int, default=None)
    parser.add_argument("--n-negatives", type=int, default=None)
    parser.add_argument("--fewshot", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="runs")
    parser.add_argument("--trace", action="store_true")
    parser.add_argument("--no-coherence", action="store_true")
    parser.add_argument(
        "--backend-param",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="extra backend hyperparameter, may repeat (e.g. script_path=script.json)",
    )


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        dataset_dir=args.dataset,
        method=args.method,
        split=args.split,
        backend=args.backend,
        scorer=args.scorer,
        k=args.k,
        lambda_weight=args.lambda_weight,
        max_steps=args.max_steps,
        use_coherence=not args.no_coherence,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        n_negatives=args.n_negatives,
        fewshot=args.fewshot,
        seed=args.seed,
        out_dir=args.out,
        trace=args.trace,
    )


def _backend_params(args: argparse.Namespace) -> dict[str, str]:
    params = {}
    for item in args.backend_param:
        if "=" not in item:
            raise ConfigError(f"--backend-param expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        params[key.strip()] = value.strip()
    return params


def _cmd_run(args: argparse.Namespace) -> int:
    result = run_experiment(_config_from_args(args), backend_params=_backend_params(args))
    print(json.dumps(result.report.to_dict(), indent=2, sort_keys=True))
    print(f"artifacts: {result.run_dir}", file=sys.stderr)
    return 0


def _cmd_grid(args: argparse.Namespace) -> int:
    base = parse_config_file(args.config)
    grid = parse_grid_file(args.grid)
    winner, cells = grid_search(base, grid)
    leaderboard = [
        {"score": cell.score, "overrides": {k: getattr(cell.config, k) for k in grid}}
        for cell in cells
    ]
    print(
        json.dumps(
            {
                "best": {k: getattr(winner, k) for k in grid},
                "leaderboard": leaderboard,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    split = load_dataset(Path(args.dataset) / f"{args.split}.jsonl", name=args.split)
    predictions: list[SubEventSequence] = []
    with Path(args.predictions).open(encoding="utf-8") as handle:
        rows = [json.loads(line) for line in handle if line.strip()]
    if len(rows) != len(split):
        raise DatasetError(
            f"predictions ({len(rows)}) and split ({len(split)}) have different sizes"
        )
    for i, (row, example) in enumerate(zip(rows, split)):
        if row.get("process") != example.process.title:
            raise DatasetError(
                f"row {i}: prediction is for {row.get('process')!r} "
                f"but the dataset has {example.process.title!r}"
            )
        predictions.append(SubEventSequence.from_texts(row["prediction"]))
    report = corpus_report(predictions, list(split.examples), create_embedder("hash"))
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_synth_coherence(args: argparse.Namespace) -> int:
    split = load_dataset(Path(args.dataset) / "train.jsonl", name="train")
    examples = build_coherence_dataset(split, args.n_negatives, args.seed)
    path = save_coherence_dataset(examples, args.out)
    print(f"wrote {len(examples)} coherence examples to {path}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="procwriter")
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser("run", help="train, decode, and evaluate one configuration")
    _add_run_arguments(run_parser)
    run_parser.set_defaults(fn=_cmd_run)

    grid_parser = sub.add_parser("grid", help="grid-search configs on the validation split")
    grid_parser.add_argument("--config", required=True, help="flat key = value base config file")
    grid_parser.add_argument("--grid", required=True, help="flat key = comma-separated values file")
    grid_parser.set_defaults(fn=_cmd_grid)

    eval_parser = sub.add_parser("eval", help="score an existing predictions file")
    eval_parser.add_argument("--predictions", required=True)
    eval_parser.add_argument("--dataset", required=True)
    eval_parser.add_argument("--split", default="test")
    eval_parser.set_defaults(fn=_cmd_eval)

    synth_parser = sub.add_parser(
        "synth-coherence", help="corrupt the train split into coherence examples"
    )
    synth_parser.add_argument("--dataset", required=True)
    synth_parser.add_argument("--n-negatives", type=int, default=2)
    synth_parser.add_argument("--seed", type=int, default=0)
    synth_parser.add_argument("--out", required=True)
    synth_parser.set_defaults(fn=_cmd_synth_coherence)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ProcwriterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
