"""Exact-cosine vector store for statute embeddings.

Vectors are L2-normalized on ingest and held as float32, so cosine
similarity reduces to a dot product and snapshots round-trip bit-exactly.
Search is an exhaustive scan: exact by construction, and fast enough for
desk-scale collections (<= ~1e5 vectors). An approximate-NN layer would
slot in behind `top_k` if that ever stops being true.

Snapshot layout (little-endian):

    magic      4 bytes  b"DLVX"
    version    u32      currently 1
    dimension  u32
    count      u32
    id table   per record (sorted by id): u32 length + UTF-8 id
    vectors    count * dimension float32, row-per-record in id-table order

Bad magic, unknown version, or short payload raises FormatError.
"""

from __future__ import annotations

import struct

import numpy as np

from .concurrency import RwLock
from .errors import DimensionMismatch, FormatError, ZeroVector
from .types import RetrievalHit

_MAGIC = b"DLVX"
_VERSION = 1

DEFAULT_DIMENSION = 1024


def _as_unit_vector(values, dim: int | None = None) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionMismatch(f"expected a 1-d vector, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("vector entries must be finite")
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ZeroVector("zero vector has no direction")
    return vec / norm


def cosine(a, b) -> float:
    """Cosine similarity of two equal-dimension nonzero vectors."""
    ua = _as_unit_vector(a)
    ub = _as_unit_vector(b, dim=ua.shape[0])
    return float(ua @ ub)


class DenseIndex:
    """Exact top-k cosine search over normalized vectors.

    Reader-writer contract matches SparseIndex: concurrent reads, or one
    writer at a time.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION, min_score: float | None = None) -> None:
        if dimension < 1:
            raise ValueError("dimension must be >= 1")
        self.dimension = dimension
        self.min_score = min_score
        self._vectors: dict[str, np.ndarray] = {}
        self._lock = RwLock()
        self._matrix: np.ndarray | None = None
        self._matrix_ids: list[str] | None = None
        self._rows64: list[np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._vectors

    @property
    def doc_ids(self) -> list[str]:
        with self._lock.read_locked():
            return sorted(self._vectors)

    def upsert(self, doc_id: str, vector) -> None:
        """Insert or replace; the stored copy is unit-length float32."""
        unit = _as_unit_vector(vector, dim=self.dimension).astype(np.float32)
        with self._lock.write_locked():
            self._vectors[doc_id] = unit
            self._invalidate_caches()

    def delete(self, doc_id: str) -> None:
        with self._lock.write_locked():
            self._vectors.pop(doc_id, None)
            self._invalidate_caches()

    def _invalidate_caches(self) -> None:
        self._matrix = None
        self._matrix_ids = None
        self._rows64 = None

    def _scan_arrays(self) -> tuple[list[str], np.ndarray]:
        if self._matrix is None or self._matrix_ids is None:
            ids = sorted(self._vectors)
            self._matrix_ids = ids
            self._matrix = (
                np.stack([self._vectors[i] for i in ids])
                if ids
                else np.empty((0, self.dimension), dtype=np.float32)
            )
        return self._matrix_ids, self._matrix

    def _scan_rows(self) -> tuple[list[str], list[np.ndarray]]:
        if self._rows64 is None or self._matrix_ids is None:
            ids, matrix = self._scan_arrays()
            self._rows64 = [np.asarray(row, dtype=np.float64) for row in matrix]
        return self._matrix_ids, self._rows64

    def top_k(self, query, k: int = 3) -> list[RetrievalHit]:
        """k nearest records by cosine, score descending, ties by doc id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        q = np.asarray(query, dtype=np.float64)
        if q.ndim != 1 or q.shape[0] != self.dimension:
            raise DimensionMismatch(f"expected dimension {self.dimension}, got {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("query entries must be finite")
        norm = float(np.linalg.norm(q))
        if norm == 0.0:
            raise ZeroVector("zero query has no direction")
        with self._lock.read_locked():
            if not self._vectors:
                return []
            # Score row by row with float64 np.dot, and divide the scalar
            # results by the query norm afterwards. A blocked matmul sums in
            # a different order and turns exact-zero cosines (common with
            # sparse signed-hash embeddings) into +-1e-18 noise, which would
            # scramble tie-break order against any naive re-computation.
            ids, rows = self._scan_rows()
            scores = np.empty(len(rows), dtype=np.float64)
            for i, row in enumerate(rows):
                scores[i] = row @ q
            scores /= norm
        order = np.lexsort((np.asarray(ids), -scores))[:k]
        hits = []
        for rank, idx in enumerate(order, start=1):
            score = float(scores[idx])
            if self.min_score is not None and score < self.min_score:
                break
            hits.append(RetrievalHit(doc_id=ids[idx], score=score, rank=rank))
        return hits

    # --- persistence ---

    def save(self, path: str) -> None:
        with self._lock.read_locked():
            ids, matrix = self._scan_arrays()
            parts = [
                _MAGIC,
                struct.pack("<III", _VERSION, self.dimension, len(ids)),
            ]
            for doc_id in ids:
                raw = doc_id.encode("utf-8")
                parts.append(struct.pack("<I", len(raw)) + raw)
            parts.append(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
            blob = b"".join(parts)
        with open(path, "wb") as fh:
            fh.write(blob)

    @classmethod
    def load(cls, path: str, min_score: float | None = None) -> "DenseIndex":
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < 16 or blob[:4] != _MAGIC:
            raise FormatError("bad magic; not a dense index snapshot")
        version, dimension, count = struct.unpack_from("<III", blob, 4)
        if version != _VERSION:
            raise FormatError(f"unsupported snapshot version {version}")
        pos = 16
        ids = []
        for _ in range(count):
            if pos + 4 > len(blob):
                raise FormatError("truncated id table")
            (length,) = struct.unpack_from("<I", blob, pos)
            pos += 4
            if pos + length > len(blob):
                raise FormatError("truncated id table")
            try:
                ids.append(blob[pos : pos + length].decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise FormatError("corrupt id payload") from exc
            pos += length
        expected = count * dimension * 4
        if len(blob) - pos != expected:
            raise FormatError("vector payload size mismatch")
        matrix = np.frombuffer(blob, dtype="<f4", count=count * dimension, offset=pos)
        matrix = matrix.reshape(count, dimension)
        index = cls(dimension=dimension, min_score=min_score)
        for i, doc_id in enumerate(ids):
            index._vectors[doc_id] = matrix[i].copy()
        return index
