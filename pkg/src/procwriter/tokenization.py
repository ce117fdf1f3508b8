"""Shared text splitting helpers.

Kept deliberately simple: whitespace splitting after isolating punctuation
marks, so every metric and model in the package agrees on token boundaries.
"""

from __future__ import annotations

import re

# Runs of one repeated punctuation mark stay together ("||" is one token).
_PUNCT = re.compile(r"(([^\w\s])\2*)")
_JOIN_PUNCT = re.compile(r"\s+([.,!?;:]+)")
_SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+|\n+")


def split_tokens(text: str, lowercase: bool = True) -> list[str]:
    """Split *text* on whitespace after separating punctuation characters."""
    if lowercase:
        text = text.lower()
    return _PUNCT.sub(r" \1 ", text).split()


def detokenize(tokens: list[str]) -> str:
    """Inverse-ish of :func:`split_tokens`: sentence punctuation attaches left."""
    return _JOIN_PUNCT.sub(r"\1", " ".join(tokens))


def segment_sentences(text: str) -> list[str]:
    """Split free text into sentences on terminal punctuation or newlines."""
    pieces = _SENTENCE_BREAK.split(text.strip())
    return [p.strip() for p in pieces if p and p.strip()]
