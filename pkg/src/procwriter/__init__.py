"""Iterative step-sequence generation with coherence-guided re-ranking."""

from .backends import (
    Candidate,
    GeneratorContract,
    ScriptedGenerator,
    TrainingConfig,
    create_backend,
    fine_tune,
    register_backend,
)
from .baselines import all_at_once_decode, make_all_at_once_pairs, top1_similar, zero_shot_decode
from .coherence import (
    CallableScorer,
    CoherenceExample,
    CoherenceScorerContract,
    LogisticCoherenceScorer,
    build_coherence_dataset,
    coherence_loss,
    coherence_loss_grad,
    corrupt_global,
    corrupt_local,
    evaluate_controller,
)
from .data import (
    STOP_LITERAL,
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
from .decoder import DecodeTrace, DecodingConfig, ScoredCandidate, decode, rerank
from .embedding import EmbeddingContract, HashingEmbedder, cosine, create_embedder
from .metrics import (
    MetricReport,
    best_of_references,
    bleu_n,
    corpus_report,
    embed_f,
    rouge_l,
    tokenize,
)
from .prompting import (
    DEFAULT_TEMPLATE,
    PromptTemplate,
    TrainingPair,
    expand_training_pairs,
    parse_prompt,
    render_coherence_text,
    render_prompt,
)
from .runner import RunConfig, RunResult, grid_search, run_experiment

__version__ = "0.1.0"

__all__ = [
    "Candidate",
    "CallableScorer",
    "CoherenceExample",
    "CoherenceScorerContract",
    "DatasetSplit",
    "DecodeTrace",
    "DecodingConfig",
    "DEFAULT_TEMPLATE",
    "EmbeddingContract",
    "GeneratorContract",
    "HashingEmbedder",
    "LogisticCoherenceScorer",
    "MetricReport",
    "Process",
    "ProcessExample",
    "PromptTemplate",
    "RunConfig",
    "RunResult",
    "ScoredCandidate",
    "ScriptedGenerator",
    "STOP_LITERAL",
    "SubEvent",
    "SubEventSequence",
    "TrainingConfig",
    "TrainingPair",
    "all_at_once_decode",
    "best_of_references",
    "bleu_n",
    "build_coherence_dataset",
    "coherence_loss",
    "coherence_loss_grad",
    "corpus_report",
    "corrupt_global",
    "corrupt_local",
    "cosine",
    "create_backend",
    "create_embedder",
    "decode",
    "embed_f",
    "evaluate_controller",
    "expand_training_pairs",
    "fine_tune",
    "grid_search",
    "is_stop_literal",
    "load_dataset",
    "make_all_at_once_pairs",
    "parse_prompt",
    "register_backend",
    "render_coherence_text",
    "render_prompt",
    "rerank",
    "rouge_l",
    "run_experiment",
    "save_dataset",
    "subsample_fewshot",
    "tokenize",
    "top1_similar",
    "zero_shot_decode",
]
