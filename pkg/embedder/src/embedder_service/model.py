"""Embedding backends.

A model spec selects the backend:

    sbert:<model_id>     sentence-transformers model (needs downloaded weights)
    hash:<dim>:<seed>    deterministic token-hash embedding, fully offline

The bare default "all-mpnet-base-v2" is shorthand for sbert:all-mpnet-base-v2.
Both backends are deterministic for a fixed process: identical text always
yields an identical vector.
"""

from __future__ import annotations

import hashlib
import re
from typing import Protocol, Sequence

import numpy as np

DEFAULT_MODEL = "all-mpnet-base-v2"

_TOKEN = re.compile(r"[a-z0-9]+")


class ModelLoadError(RuntimeError):
    pass


class Embedder(Protocol):
    model_id: str
    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class HashEmbedder:
    """Averages seeded pseudo-random unit vectors per token. Texts sharing
    tokens get correlated vectors, which preserves coarse lexical similarity
    ordering without any model weights."""

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 2:
            raise ModelLoadError(f"dim must be >= 2, got {dim}")
        self.model_id = f"hash:{dim}:{seed}"
        self.dim = dim
        self.seed = seed
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        digest = hashlib.sha256(f"{self.seed}:{token}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        v = rng.standard_normal(self.dim)
        v /= np.linalg.norm(v)
        self._cache[token] = v
        return v

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            tokens = _TOKEN.findall(text.lower())
            if tokens:
                out[i] = np.mean([self._token_vector(t) for t in tokens], axis=0)
            else:
                out[i] = self._token_vector("")
        return out


class SbertEmbedder:
    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as e:
            raise ModelLoadError(f"sentence-transformers not installed: {e}") from None
        try:
            self._model = SentenceTransformer(model_id, device="cpu")
        except Exception as e:
            raise ModelLoadError(f"could not load model {model_id!r}: {e}") from None
        self.model_id = model_id
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(self._model.encode(list(texts), convert_to_numpy=True))


def load_model(spec: str = DEFAULT_MODEL) -> Embedder:
    """Instantiate the backend for a model spec; raises ModelLoadError so the
    service can refuse to start on a broken configuration."""
    if spec.startswith("hash:"):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ModelLoadError(f"expected hash:<dim>:<seed>, got {spec!r}")
        return HashEmbedder(dim=int(parts[1]), seed=int(parts[2]))
    if spec.startswith("sbert:"):
        return SbertEmbedder(spec[len("sbert:") :])
    return SbertEmbedder(spec)
