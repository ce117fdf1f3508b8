"""Text-overlap metrics and the per-run aggregate report.

Conventions (pinned here so the numbers are reproducible):

* tokenization is lowercase whitespace splitting after isolating punctuation;
* metrics are sentence-level, averaged over examples, then scaled to 0-100;
* BLEU uses add-one smoothing on n-gram counts only when the raw match
  count is zero, and brevity penalty ``min(1, exp(1 - |ref| / |pred|))``;
* with multiple references the best per-reference score is kept;
* length regression (MAE / RMSE) compares the prediction length against the
  reference whose length is closest to it.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass

from .data import ProcessExample, SubEventSequence
from .embedding import EmbeddingContract, HashingEmbedder, cosine
from .tokenization import split_tokens

METRIC_IDS = ("bleu1", "bleu2", "rougeL", "embed_f")


def tokenize(text: str) -> list[str]:
    return split_tokens(text, lowercase=True)


def flatten_sequence(sequence: SubEventSequence) -> str:
    """Join step texts into one evaluable string."""
    return " ".join(sequence.texts())


def bleu_n(prediction_tokens: list[str], reference_tokens: list[str], n: int) -> float:
    """Modified n-gram precision times brevity penalty, in [0, 1]."""
    if n not in (1, 2):
        raise ValueError("only BLEU-1 and BLEU-2 are supported")
    if not prediction_tokens or not reference_tokens:
        return 0.0
    total = len(prediction_tokens) - n + 1
    if total <= 0:
        return 0.0
    pred_counts = Counter(
        tuple(prediction_tokens[i : i + n]) for i in range(total)
    )
    ref_counts = Counter(
        tuple(reference_tokens[i : i + n]) for i in range(len(reference_tokens) - n + 1)
    )
    matched = sum(min(count, ref_counts[gram]) for gram, count in pred_counts.items())
    if matched == 0:
        precision = (matched + 1) / (total + 1)
    else:
        precision = matched / total
    brevity = min(1.0, math.exp(1.0 - len(reference_tokens) / len(prediction_tokens)))
    return precision * brevity


def _lcs_length(a: list[str], b: list[str]) -> int:
    # Rolling single-row dynamic program.
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        current = [0] * (len(b) + 1)
        ai = a[i - 1]
        for j in range(1, len(b) + 1):
            if ai == b[j - 1]:
                current[j] = previous[j - 1] + 1
            else:
                current[j] = max(previous[j], current[j - 1])
        previous = current
    return previous[len(b)]


def rouge_l(prediction_tokens: list[str], reference_tokens: list[str]) -> float:
    """LCS-based F-measure ``2PR / (P + R)``; 0 when either side is empty."""
    if not prediction_tokens or not reference_tokens:
        return 0.0
    lcs = _lcs_length(prediction_tokens, reference_tokens)
    if lcs == 0:
        return 0.0
    precision = lcs / len(prediction_tokens)
    recall = lcs / len(reference_tokens)
    return 2.0 * precision * recall / (precision + recall)


def embed_f(prediction: str, reference: str, embedder: EmbeddingContract) -> float:
    """Greedy token-matching F-score under per-token embeddings.

    Precision is the mean, over prediction tokens, of the best cosine against
    any reference token; recall is symmetric; the result is their harmonic
    mean. Returns 0 when either side has no tokens.
    """
    pred_tokens = tokenize(prediction)
    ref_tokens = tokenize(reference)
    if not pred_tokens or not ref_tokens:
        return 0.0
    pred_vectors = [embedder.embed(t) for t in pred_tokens]
    ref_vectors = [embedder.embed(t) for t in ref_tokens]
    precision = sum(
        max(cosine(p, r) for r in ref_vectors) for p in pred_vectors
    ) / len(pred_vectors)
    recall = sum(
        max(cosine(r, p) for p in pred_vectors) for r in ref_vectors
    ) / len(ref_vectors)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _single_metric(
    prediction: SubEventSequence,
    reference: SubEventSequence,
    metric: str,
    embedder: EmbeddingContract | None,
) -> float:
    pred_text = flatten_sequence(prediction)
    ref_text = flatten_sequence(reference)
    if metric == "bleu1":
        return bleu_n(tokenize(pred_text), tokenize(ref_text), 1)
    if metric == "bleu2":
        return bleu_n(tokenize(pred_text), tokenize(ref_text), 2)
    if metric == "rougeL":
        return rouge_l(tokenize(pred_text), tokenize(ref_text))
    if metric == "embed_f":
        return embed_f(pred_text, ref_text, embedder if embedder is not None else HashingEmbedder())
    raise ValueError(f"unknown metric {metric!r}; expected one of {METRIC_IDS}")


def best_of_references(
    prediction: SubEventSequence,
    references: list[SubEventSequence] | tuple[SubEventSequence, ...],
    metric: str,
    embedder: EmbeddingContract | None = None,
) -> float:
    """Evaluate *metric* against each reference and keep the maximum."""
    if not references:
        raise ValueError("best_of_references needs at least one reference")
    return max(_single_metric(prediction, ref, metric, embedder) for ref in references)


def length_error(prediction_length: int, reference_lengths: list[int]) -> int:
    """Absolute length error against the closest-length reference."""
    if not reference_lengths:
        raise ValueError("length_error needs at least one reference length")
    return min(abs(prediction_length - r) for r in reference_lengths)


def mae_rmse(prediction_lengths: list[int], reference_length_lists: list[list[int]]) -> tuple[float, float]:
    """Sequence-length regression errors over aligned predictions/references."""
    if len(prediction_lengths) != len(reference_length_lists):
        raise ValueError("length vectors are misaligned")
    if not prediction_lengths:
        return 0.0, 0.0
    errors = [
        length_error(p, refs) for p, refs in zip(prediction_lengths, reference_length_lists)
    ]
    mae = math.fsum(errors) / len(errors)
    rmse = math.sqrt(math.fsum(e * e for e in errors) / len(errors))
    return mae, rmse


@dataclass(frozen=True)
class MetricReport:
    """Per-run aggregate. Text metrics on a 0-100 scale, lengths in steps."""

    bleu1: float
    bleu2: float
    rougeL: float
    embed_f: float
    mae: float
    rmse: float
    n_examples: int

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not math.isfinite(value):
                raise ValueError(f"metric field {name} is not finite: {value}")

    def text_metric_sum(self) -> float:
        """Sum of the four 0-100 text metrics; the model-selection criterion."""
        return self.bleu1 + self.bleu2 + self.rougeL + self.embed_f

    def to_dict(self) -> dict:
        return {
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "rougeL": self.rougeL,
            "embed_f": self.embed_f,
            "mae": self.mae,
            "rmse": self.rmse,
            "n_examples": self.n_examples,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "MetricReport":
        return cls(
            bleu1=payload["bleu1"],
            bleu2=payload["bleu2"],
            rougeL=payload["rougeL"],
            embed_f=payload["embed_f"],
            mae=payload["mae"],
            rmse=payload["rmse"],
            n_examples=payload["n_examples"],
        )


def corpus_report(
    predictions: list[SubEventSequence],
    examples: list[ProcessExample] | tuple[ProcessExample, ...],
    embedder: EmbeddingContract | None = None,
) -> MetricReport:
    """Aggregate best-of-reference metrics and length errors over a corpus."""
    if len(predictions) != len(examples):
        raise ValueError(
            f"predictions ({len(predictions)}) and examples ({len(examples)}) are misaligned"
        )
    if not predictions:
        return MetricReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0)
    embedder = embedder if embedder is not None else HashingEmbedder()
    sums = {metric: 0.0 for metric in METRIC_IDS}
    for prediction, example in zip(predictions, examples):
        for metric in METRIC_IDS:
            sums[metric] += best_of_references(
                prediction, example.references, metric, embedder
            )
    n = len(predictions)
    mae, rmse = mae_rmse(
        [len(p) for p in predictions],
        [[len(r) for r in ex.references] for ex in examples],
    )
    return MetricReport(
        bleu1=100.0 * sums["bleu1"] / n,
        bleu2=100.0 * sums["bleu2"] / n,
        rougeL=100.0 * sums["rougeL"] / n,
        embed_f=100.0 * sums["embed_f"] / n,
        mae=mae,
        rmse=rmse,
        n_examples=n,
    )
