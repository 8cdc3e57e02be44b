"""Pluggable text-embedding providers.

Two kinds:

- `HashedEmbedder`: deterministic signed-bucket hashing of analyzer tokens.
  Model-free and pure, so tests and offline runs never need a network. It
  makes no quality claims; its one useful property is that token-identical
  texts embed identically.
- `RemoteEmbedder`: JSON-over-HTTP client for a real encoder service,
  speaking the common embeddings wire shape
  (request ``{"model", "input": [...]}``, response
  ``{"data": [{"index", "embedding"}, ...]}``).

Every provider returns one L2-normalized, finite vector per input text, in
input order, with a fixed dimension.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np
import requests

from .analysis import AnalyzerConfig, normalize, tokenize
from .errors import BadResponse, EmptyText, ProviderUnavailable
from .hashing import EMBED_BUCKET_NS, EMBED_SIGN_NS, stable_hash64

DEFAULT_DIMENSION = 1024


def hashed_embed(text: str, dimension: int, cfg: AnalyzerConfig | None = None) -> np.ndarray:
    """Signed-hash bag-of-tokens embedding, unit length.

    Each token surface picks a bucket and a sign from two fixed-seed
    hashes; occurrences accumulate. A text with no tokens (or one whose
    signs cancel exactly) maps to the first basis vector so the result is
    always a direction.
    """
    if dimension < 8:
        raise ValueError("dimension must be >= 8")
    acc = np.zeros(dimension, dtype=np.float64)
    for token in tokenize(text, cfg):
        bucket = stable_hash64(token.surface, EMBED_BUCKET_NS) % dimension
        sign = 1.0 if stable_hash64(token.surface, EMBED_SIGN_NS) & 1 else -1.0
        acc[bucket] += sign
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        acc[0] = 1.0
        return acc
    return acc / norm


@dataclass(frozen=True)
class EmbeddingProviderConfig:
    kind: str = "hashed_local"  # or "remote"
    endpoint_url: str | None = None
    model_name: str | None = None
    dimension: int = DEFAULT_DIMENSION
    timeout: float = 10.0
    max_batch: int = 16
    max_in_flight: int = 4
    query_prefix: str = ""
    passage_prefix: str = ""


class HashedEmbedder:
    """Deterministic local provider; safe for unrestricted concurrent use."""

    def __init__(self, dimension: int = DEFAULT_DIMENSION, analyzer: AnalyzerConfig | None = None):
        if dimension < 8:
            raise ValueError("dimension must be >= 8")
        self.dimension = dimension
        self.analyzer = analyzer

    def embed_batch(self, texts: list[str], role: str | None = None) -> list[np.ndarray]:
        if not texts:
            raise ValueError("embed_batch requires at least one text")
        for text in texts:
            if normalize(text) == "":
                raise EmptyText("text is empty after normalization")
        return [hashed_embed(t, self.dimension, self.analyzer) for t in texts]


class RemoteEmbedder:
    """HTTP client for an external encoder.

    Batches larger than `max_batch` are split into sequential requests; a
    semaphore caps concurrently in-flight requests across threads.
    """

    def __init__(self, config: EmbeddingProviderConfig, session: requests.Session | None = None):
        if not config.endpoint_url:
            raise ValueError("remote provider requires endpoint_url")
        if config.dimension < 8:
            raise ValueError("dimension must be >= 8")
        self.config = config
        self.dimension = config.dimension
        self._session = session or requests.Session()
        self._gate = threading.BoundedSemaphore(max(1, config.max_in_flight))

    def embed_batch(self, texts: list[str], role: str | None = None) -> list[np.ndarray]:
        if not texts:
            raise ValueError("embed_batch requires at least one text")
        for text in texts:
            if normalize(text) == "":
                raise EmptyText("text is empty after normalization")
        prefix = ""
        if role == "query":
            prefix = self.config.query_prefix
        elif role == "passage":
            prefix = self.config.passage_prefix
        payload = [prefix + t for t in texts]
        out: list[np.ndarray] = []
        step = max(1, self.config.max_batch)
        for start in range(0, len(payload), step):
            out.extend(self._request(payload[start : start + step]))
        return out

    def _request(self, texts: list[str]) -> list[np.ndarray]:
        body = {"model": self.config.model_name or "", "input": texts}
        with self._gate:
            try:
                resp = self._session.post(
                    self.config.endpoint_url,
                    json=body,
                    timeout=self.config.timeout,
                )
            except requests.RequestException as exc:
                raise ProviderUnavailable(str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise ProviderUnavailable(f"endpoint returned HTTP {resp.status_code}")
        try:
            data = resp.json()["data"]
            rows = sorted(data, key=lambda item: item["index"])
            vectors = [np.asarray(row["embedding"], dtype=np.float64) for row in rows]
        except (ValueError, KeyError, TypeError) as exc:
            raise BadResponse(f"malformed embeddings payload: {exc}") from exc
        if len(vectors) != len(texts):
            raise BadResponse(f"expected {len(texts)} embeddings, got {len(vectors)}")
        out = []
        for vec in vectors:
            if vec.ndim != 1 or vec.shape[0] != self.dimension:
                raise BadResponse(
                    f"embedding dimension {vec.shape} does not match configured {self.dimension}"
                )
            if not np.all(np.isfinite(vec)):
                raise BadResponse("embedding contains non-finite values")
            norm = float(np.linalg.norm(vec))
            if norm == 0.0:
                raise BadResponse("embedding is a zero vector")
            out.append(vec / norm)
        return out


def build_provider(config: EmbeddingProviderConfig):
    if config.kind == "hashed_local":
        return HashedEmbedder(dimension=config.dimension)
    if config.kind == "remote":
        return RemoteEmbedder(config)
    raise ValueError(f"unknown embedding provider kind: {config.kind!r}")
