"""Independent brute-force reference implementations used only by tests.

These deliberately avoid the library's own code paths: clipped n-gram
counts come from position-by-position matching with a used-slot mask, and
the LCS length comes from a full quadratic table.
"""

from __future__ import annotations

import math


def _ngram_positions(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def brute_bleu(pred: list[str], ref: list[str], n: int) -> float:
    if not pred or not ref:
        return 0.0
    pred_grams = _ngram_positions(pred, n)
    ref_grams = _ngram_positions(ref, n)
    if not pred_grams:
        return 0.0
    used = [False] * len(ref_grams)
    matched = 0
    for gram in pred_grams:
        for j, candidate in enumerate(ref_grams):
            if not used[j] and candidate == gram:
                used[j] = True
                matched += 1
                break
    total = len(pred_grams)
    if matched == 0:
        precision = (matched + 1) / (total + 1)
    else:
        precision = matched / total
    brevity = min(1.0, math.exp(1.0 - len(ref) / len(pred)))
    return precision * brevity


def brute_rouge_l(pred: list[str], ref: list[str]) -> float:
    if not pred or not ref:
        return 0.0
    rows, cols = len(pred), len(ref)
    table = [[0] * (cols + 1) for _ in range(rows + 1)]
    for i in range(1, rows + 1):
        for j in range(1, cols + 1):
            if pred[i - 1] == ref[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    lcs = table[rows][cols]
    if lcs == 0:
        return 0.0
    precision = lcs / len(pred)
    recall = lcs / len(ref)
    return 2.0 * precision * recall / (precision + recall)


def central_difference(fn, x: float, h: float = 1e-6) -> float:
    return (fn(x + h) - fn(x - h)) / (2.0 * h)
