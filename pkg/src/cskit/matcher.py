"""Claim-to-myth matching over sentence embeddings.

Embeddings come from a provider selected by URL: "stub:" gives the built-in
deterministic provider (fixed table plus a seeded token-hashing fallback), an
http(s) URL hits the sidecar's POST /embed contract. Matches above the
similarity threshold (strict >) are assembled into knowledge bundles, one per
claim, pairs ordered by descending similarity.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from cskit.corpus import Claim, KnowledgeBundle, NGOReport
from cskit.editmetrics import tokenize

DEFAULT_SIMILARITY_THRESHOLD = 0.4
DEFAULT_MODEL_ID = "all-mpnet-base-v2"


class ProviderError(RuntimeError):
    pass


class EmbeddingProvider(Protocol):
    dim: int

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class StubEmbedder:
    """Deterministic offline provider: exact texts found in the table get the
    table vector; anything else gets the average of per-token unit vectors
    drawn from a generator seeded by sha256(seed, token)."""

    def __init__(self, table: Mapping[str, Sequence[float]] | None = None, dim: int = 8, seed: int = 0):
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in (table or {}).items()}
        for key, vec in self.table.items():
            if len(vec) != dim:
                raise ProviderError(f"table vector for {key!r} has dim {len(vec)}, expected {dim}")
        self.dim = dim
        self.seed = seed

    def _token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.sha256(f"{self.seed}:{token}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            if not text:
                raise ProviderError("cannot embed an empty string")
            if text in self.table:
                out.append(self.table[text].copy())
                continue
            tokens = tokenize(text).tokens
            if not tokens:
                raise ProviderError(f"no tokens in {text!r}")
            out.append(np.mean([self._token_vector(t) for t in tokens], axis=0))
        return out


class HttpEmbedder:
    """Client for the embedding sidecar wire contract."""

    def __init__(self, base_url: str, model_id: str = DEFAULT_MODEL_ID, batch_size: int = 32, client=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.batch_size = batch_size
        self._client = client or httpx.Client(timeout=60.0)
        self.dim: int | None = None

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            batch = list(texts[start : start + self.batch_size])
            try:
                resp = self._client.post(f"{self.base_url}/embed", json={"texts": batch})
            except Exception as e:
                raise ProviderError(f"embedding provider unreachable: {e}") from None
            if resp.status_code != 200:
                raise ProviderError(f"embedding provider returned {resp.status_code}: {resp.text}")
            payload = resp.json()
            dim = payload["dim"]
            if self.dim is None:
                self.dim = dim
            elif dim != self.dim:
                raise ProviderError(f"provider dim changed from {self.dim} to {dim}")
            for vec in payload["vectors"]:
                arr = np.asarray(vec, dtype=np.float64)
                if len(arr) != dim:
                    raise ProviderError("vector length disagrees with reported dim")
                out.append(arr)
        return out


def make_provider(provider_url: str, model_id: str = DEFAULT_MODEL_ID, batch_size: int = 32, stub_table_path: str | Path | None = None) -> EmbeddingProvider:
    if provider_url.startswith("stub:"):
        table = None
        if stub_table_path:
            table = json.loads(Path(stub_table_path).read_text(encoding="utf-8"))
        dim = len(next(iter(table.values()))) if table else 8
        return StubEmbedder(table=table, dim=dim)
    return HttpEmbedder(provider_url, model_id=model_id, batch_size=batch_size)


def embed(provider: EmbeddingProvider, texts: Sequence[str]) -> list[np.ndarray]:
    """One finite vector per text, all of equal dimension."""
    if not texts:
        return []
    vectors = provider.embed(texts)
    if len(vectors) != len(texts):
        raise ProviderError(f"provider returned {len(vectors)} vectors for {len(texts)} texts")
    dims = {len(v) for v in vectors}
    if len(dims) != 1:
        raise ProviderError(f"dimension mismatch within batch: {sorted(dims)}")
    for i, v in enumerate(vectors):
        if not np.all(np.isfinite(v)):
            raise ProviderError(f"non-finite vector for text {i}")
    return vectors


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for a zero vector")
    return float(np.dot(a, b) / (na * nb))


@dataclass(frozen=True)
class MatchResult:
    claim_id: str
    myth_ref: tuple[str, int]  # (report_id, pair_index)
    similarity: float
    accepted: bool = True  # manual post-review flag; default accept


def match_claims(
    claims: Sequence[Claim],
    reports: Sequence[NGOReport],
    provider: EmbeddingProvider,
    threshold: float = DEFAULT_SIMILARITY_THRESHOLD,
) -> list[MatchResult]:
    """Score every (claim, myth) pair; keep similarities strictly above the
    threshold, per claim in descending order (ties by myth reference)."""
    if not -1.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [-1, 1], got {threshold}")
    myth_refs: list[tuple[str, int]] = []
    myth_texts: list[str] = []
    for report in reports:
        for idx, (myth, _anti) in enumerate(report.pairs):
            myth_refs.append((report.id, idx))
            myth_texts.append(myth)
    if not claims or not myth_texts:
        return []
    claim_vecs = embed(provider, [c.text for c in claims])
    myth_vecs = embed(provider, myth_texts)

    results: list[MatchResult] = []
    for claim, cvec in zip(claims, claim_vecs):
        scored = []
        for ref, mvec in zip(myth_refs, myth_vecs):
            sim = cosine(cvec, mvec)
            if sim > threshold:
                scored.append(MatchResult(claim_id=claim.id, myth_ref=ref, similarity=sim))
        scored.sort(key=lambda m: (-m.similarity, m.myth_ref))
        results.extend(scored)
    return results


@dataclass(frozen=True)
class BundleBuild:
    bundles: list[KnowledgeBundle] = field(default_factory=list)
    unmatched_claim_ids: list[str] = field(default_factory=list)


def build_bundles(
    match_results: Iterable[MatchResult],
    claims: Sequence[Claim],
    reports: Mapping[str, NGOReport],
) -> BundleBuild:
    """One bundle per claim with at least one accepted match; pairs keep the
    per-claim match order. Claims without matches are reported, not failed."""
    by_claim: dict[str, list[MatchResult]] = {}
    for m in match_results:
        if m.accepted:
            by_claim.setdefault(m.claim_id, []).append(m)
    bundles = []
    unmatched = []
    for claim in sorted(claims, key=lambda c: c.id):
        matches = by_claim.get(claim.id)
        if not matches:
            unmatched.append(claim.id)
            continue
        pairs = []
        for m in matches:
            report_id, idx = m.myth_ref
            myth, anti = reports[report_id].pairs[idx]
            pairs.append((myth, anti, m.similarity))
        bundles.append(
            KnowledgeBundle(
                claim_id=claim.id,
                fc_article_id=claim.source_article_id,
                ngo_pairs=tuple(pairs),
            )
        )
    return BundleBuild(bundles=bundles, unmatched_claim_ids=unmatched)


def set_review_flags(matches: Sequence[MatchResult], rejected: set[tuple[str, str, int]]) -> list[MatchResult]:
    """Apply manual review decisions; keys are (claim_id, report_id, pair_index)."""
    return [
        replace(m, accepted=(m.claim_id, *m.myth_ref) not in rejected) for m in matches
    ]
