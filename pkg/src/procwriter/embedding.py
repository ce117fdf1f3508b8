"""Embedding contract plus a deterministic hash-based implementation.

The package does not bundle pretrained word or sentence vectors; anything
exposing :class:`EmbeddingContract` can be plugged in. The hashing embedder
assigns each token a fixed pseudo-random unit vector, which makes identical
tokens collide exactly and distinct tokens nearly orthogonal.
"""

from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod

import numpy as np

from .tokenization import split_tokens


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; defined as 0.0 when either vector has zero norm."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class EmbeddingContract(ABC):
    """Deterministic text-to-vector mapping with a fixed output dimension."""

    @property
    @abstractmethod
    def dimension(self) -> int: ...

    @abstractmethod
    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder(EmbeddingContract):
    """Bag of hashed token vectors; deterministic across runs and platforms."""

    def __init__(self, dimension: int = 64):
        if dimension < 1:
            raise ValueError("embedding dimension must be positive")
        self._dimension = dimension
        self._cache: dict[str, np.ndarray] = {}

    @property
    def dimension(self) -> int:
        return self._dimension

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            seed = int.from_bytes(digest, "big")
            rng = np.random.Generator(np.random.PCG64(seed))
            vec = rng.standard_normal(self._dimension)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        tokens = split_tokens(text)
        if not tokens:
            return np.zeros(self._dimension)
        return np.sum([self._token_vector(t) for t in tokens], axis=0)


EMBEDDERS = {"hash": HashingEmbedder}


def create_embedder(name: str, **kwargs) -> EmbeddingContract:
    if name not in EMBEDDERS:
        raise KeyError(f"unknown embedder {name!r}; registered: {sorted(EMBEDDERS)}")
    return EMBEDDERS[name](**kwargs)
