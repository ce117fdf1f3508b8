"""Generator contract, the deterministic scripted backend, and the registry.

A generator exposes ``topk(prompt, k)`` returning up to k next-step
candidates with log conditional probabilities, plus ``fine_tune`` over
prompt/target training pairs. How candidates are produced (beam search,
sampling) is the adapter's concern; instances serialize their own calls.

Registered names: ``"mock"`` (scripted lookup; inject a script or point the
``script_path`` parameter at a JSON file) and ``"tiny-seq2seq"`` (a small
trainable encoder-decoder; see :mod:`procwriter.tiny_seq2seq`). Additional
adapters, e.g. one wrapping a pretrained seq2seq model, plug in through
:func:`register_backend` without touching the decode loop.
"""

from __future__ import annotations

import difflib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Protocol, Sequence, runtime_checkable

from .errors import BackendError, ScriptError
from .prompting import TrainingPair


@dataclass(frozen=True)
class Candidate:
    """A generated continuation and its log conditional probability."""

    text: str
    logprob: float

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("candidate text must be non-empty")
        if not math.isfinite(self.logprob) or self.logprob > 0.0:
            raise ValueError(f"candidate logprob must be finite and <= 0, got {self.logprob}")


def validate_candidate_batch(candidates: Sequence[Candidate]) -> None:
    """Enforce the batch invariants: non-increasing logprob, distinct texts."""
    for earlier, later in zip(candidates, candidates[1:]):
        if later.logprob > earlier.logprob:
            raise ValueError(
                f"candidates out of logprob order: {later.logprob} after {earlier.logprob}"
            )
    texts = [c.text for c in candidates]
    if len(set(texts)) != len(texts):
        raise ValueError(f"candidate texts must be distinct, got {texts}")


@dataclass(frozen=True)
class TrainingConfig:
    """Flat training hyperparameters common to all trainable backends."""

    learning_rate: float = 3e-3
    batch_size: int = 32
    epochs: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be at least 1")

    @classmethod
    def from_mapping(cls, params: Mapping[str, object]) -> "TrainingConfig":
        known = {f: params[f] for f in ("learning_rate", "batch_size", "epochs", "seed") if f in params}
        return cls(**known)  # type: ignore[arg-type]


SelectionHook = Callable[["GeneratorContract"], float]


@runtime_checkable
class GeneratorContract(Protocol):
    """Structural contract realized by every generator adapter."""

    @property
    def mask_token(self) -> str: ...

    def topk(self, prompt: str, k: int) -> list[Candidate]: ...

    def fine_tune(
        self,
        pairs: Sequence[TrainingPair],
        config: TrainingConfig,
        *,
        select_by: Optional[SelectionHook] = None,
    ) -> "GeneratorContract": ...


class ScriptedGenerator:
    """Deterministic lookup-table generator for tests and tracing.

    The script maps full prompt strings to candidate lists; each list is
    validated at construction. Unknown prompts raise :class:`ScriptError`
    naming the nearest scripted prompt.
    """

    def __init__(
        self,
        script: Mapping[str, Sequence[Candidate | tuple[str, float]]],
        mask_token: str = "[M]",
    ):
        self._mask_token = mask_token
        self._script: dict[str, list[Candidate]] = {}
        for prompt, raw_candidates in script.items():
            candidates = [
                c if isinstance(c, Candidate) else Candidate(text=c[0], logprob=c[1])
                for c in raw_candidates
            ]
            if not candidates:
                raise ValueError(f"scripted prompt {prompt!r} has no candidates")
            validate_candidate_batch(candidates)
            self._script[prompt] = candidates

    @classmethod
    def from_json_file(cls, path: str | Path, mask_token: str = "[M]") -> "ScriptedGenerator":
        with Path(path).open(encoding="utf-8") as handle:
            raw = json.load(handle)
        return cls({prompt: [tuple(c) for c in cands] for prompt, cands in raw.items()},
                   mask_token=mask_token)

    @property
    def mask_token(self) -> str:
        return self._mask_token

    def topk(self, prompt: str, k: int) -> list[Candidate]:
        if k < 1:
            raise ValueError("k must be at least 1")
        if prompt not in self._script:
            nearest = difflib.get_close_matches(prompt, self._script.keys(), n=1, cutoff=0.0)
            hint = f"; nearest scripted prompt: {nearest[0]!r}" if nearest else ""
            raise ScriptError(f"no scripted candidates for prompt {prompt!r}{hint}")
        return list(self._script[prompt][:k])

    def fine_tune(self, pairs, config, *, select_by=None) -> "ScriptedGenerator":
        if not pairs:
            raise ValueError("cannot fine-tune on an empty pair list")
        return self


def fine_tune(
    generator: GeneratorContract,
    pairs: Sequence[TrainingPair],
    config: TrainingConfig,
    *,
    select_by: Optional[SelectionHook] = None,
) -> GeneratorContract:
    """Train *generator* on *pairs*; backend failures surface with context."""
    if not pairs:
        raise ValueError("cannot fine-tune on an empty pair list")
    try:
        return generator.fine_tune(pairs, config, select_by=select_by)
    except (ValueError, BackendError):
        raise
    except Exception as exc:  # pragma: no cover - backend-specific failures
        raise BackendError(f"fine-tuning failed in {type(generator).__name__}: {exc}") from exc


def _mock_factory(params: Mapping[str, object]) -> GeneratorContract:
    script_path = params.get("script_path")
    if script_path is None:
        raise BackendError(
            "the 'mock' backend needs a script: pass script_path=<json file> "
            "or construct ScriptedGenerator directly"
        )
    return ScriptedGenerator.from_json_file(str(script_path))


def _tiny_factory(params: Mapping[str, object]) -> GeneratorContract:
    from .tiny_seq2seq import TinySeq2Seq, TinyModelConfig

    known = {
        f: params[f]
        for f in ("embedding_dim", "hidden_dim", "beam_width", "max_output_tokens")
        if f in params
    }
    return TinySeq2Seq(TinyModelConfig(**known))  # type: ignore[arg-type]


BACKENDS: dict[str, Callable[[Mapping[str, object]], GeneratorContract]] = {
    "mock": _mock_factory,
    "tiny-seq2seq": _tiny_factory,
}


def register_backend(name: str, factory: Callable[[Mapping[str, object]], GeneratorContract]) -> None:
    BACKENDS[name] = factory


def create_backend(name: str, params: Mapping[str, object] | None = None) -> GeneratorContract:
    if name not in BACKENDS:
        raise KeyError(f"unknown backend {name!r}; registered: {sorted(BACKENDS)}")
    return BACKENDS[name](params or {})
