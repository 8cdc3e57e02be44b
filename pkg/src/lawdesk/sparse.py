"""In-process inverted index with BM25 ranking.

Scoring uses the non-negative idf variant ``ln(1 + (N - df + 0.5) / (df + 0.5))``
so scores never go negative, matching the behavior of mainstream search
engines. Defaults k1=1.2, b=0.75.

Snapshot layout (all integers little-endian, strings UTF-8 and
length-prefixed with a u32):

    magic        4 bytes  b"DLSX"
    version      u32      currently 1
    k1, b        f64, f64
    analyzer     u8 emit_cjk_unigrams, u32 min_latin_len,
                 u32 stopword count, then each stopword as string
    doc table    u32 doc count, then per doc (sorted by id):
                 id string, u32 token length
    postings     u32 term count, then per term (sorted): term string,
                 u32 entry count, then per entry u32 doc index + u32 tf
                 (doc indexes ascending; they point into the doc table)

Derived statistics (avg length, document frequencies) are rebuilt on load.
Any short read, bad magic, or unknown version raises FormatError.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

from .analysis import AnalyzerConfig, term_counts, tokenize
from .concurrency import RwLock
from .errors import DuplicateDocId, FormatError, UnknownDocId
from .types import RetrievalHit

_MAGIC = b"DLSX"
_VERSION = 1


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if not (self.k1 > 0):
            raise ValueError("k1 must be > 0")
        if not (0.0 <= self.b <= 1.0):
            raise ValueError("b must be in [0, 1]")


@dataclass(frozen=True)
class CorpusStats:
    doc_count: int
    avg_doc_len: float
    doc_len: dict[str, int] = field(repr=False)
    doc_freq: dict[str, int] = field(repr=False)


def idf(doc_count: int, doc_freq: int) -> float:
    """Non-negative inverse document frequency."""
    return math.log(1.0 + (doc_count - doc_freq + 0.5) / (doc_freq + 0.5))


class SparseIndex:
    """BM25 inverted index over analyzed text.

    Many readers or one writer; a search never observes a half-applied
    index mutation.
    """

    def __init__(
        self,
        analyzer: AnalyzerConfig | None = None,
        params: Bm25Params | None = None,
    ) -> None:
        self.analyzer = analyzer if analyzer is not None else AnalyzerConfig()
        self.params = params if params is not None else Bm25Params()
        self._postings: dict[str, dict[str, int]] = {}
        self._doc_len: dict[str, int] = {}
        self._lock = RwLock()

    def __len__(self) -> int:
        return len(self._doc_len)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._doc_len

    @property
    def doc_ids(self) -> list[str]:
        with self._lock.read_locked():
            return sorted(self._doc_len)

    def stats(self) -> CorpusStats:
        with self._lock.read_locked():
            n = len(self._doc_len)
            total = sum(self._doc_len.values())
            return CorpusStats(
                doc_count=n,
                avg_doc_len=total / n if n else 0.0,
                doc_len=dict(self._doc_len),
                doc_freq={t: len(e) for t, e in self._postings.items()},
            )

    # --- mutation ---

    def index_doc(self, doc_id: str, text: str) -> None:
        """Index one document; re-indexing an id requires delete_doc first."""
        with self._lock.write_locked():
            if doc_id in self._doc_len:
                raise DuplicateDocId(doc_id)
            tokens = tokenize(text, self.analyzer)
            self._doc_len[doc_id] = len(tokens)
            for term, tf in term_counts(tokens).items():
                self._postings.setdefault(term, {})[doc_id] = tf

    def delete_doc(self, doc_id: str) -> None:
        with self._lock.write_locked():
            if doc_id not in self._doc_len:
                raise UnknownDocId(doc_id)
            del self._doc_len[doc_id]
            empty = []
            for term, entries in self._postings.items():
                entries.pop(doc_id, None)
                if not entries:
                    empty.append(term)
            for term in empty:
                del self._postings[term]

    # --- scoring ---

    def bm25_score(
        self,
        query_terms: list[str],
        doc_id: str,
        params: Bm25Params | None = None,
    ) -> float:
        with self._lock.read_locked():
            if doc_id not in self._doc_len:
                raise UnknownDocId(doc_id)
            return self._score(query_terms, doc_id, params or self.params)

    def _score(self, query_terms: list[str], doc_id: str, p: Bm25Params) -> float:
        n = len(self._doc_len)
        total = sum(self._doc_len.values())
        avg_len = total / n if n else 0.0
        return self._score_fast(query_terms, doc_id, p, n, avg_len)

    def _score_fast(
        self, query_terms: list[str], doc_id: str, p: Bm25Params, n: int, avg_len: float
    ) -> float:
        length = self._doc_len[doc_id]
        norm = 1.0 - p.b + p.b * (length / avg_len) if avg_len > 0 else 1.0
        score = 0.0
        for term in query_terms:
            entries = self._postings.get(term)
            if not entries:
                continue
            tf = entries.get(doc_id, 0)
            if tf == 0:
                continue
            score += idf(n, len(entries)) * tf * (p.k1 + 1.0) / (tf + p.k1 * norm)
        return score

    def search(self, query: str, k: int = 10) -> list[RetrievalHit]:
        """Top-k documents by BM25, score descending, ties by doc id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        with self._lock.read_locked():
            terms = [t.surface for t in tokenize(query, self.analyzer)]
            candidates: set[str] = set()
            for term in terms:
                candidates.update(self._postings.get(term, ()))
            if not candidates:
                return []
            n = len(self._doc_len)
            avg_len = sum(self._doc_len.values()) / n
            scored = [
                (self._score_fast(terms, doc_id, self.params, n, avg_len), doc_id)
                for doc_id in candidates
            ]
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        return [
            RetrievalHit(doc_id=doc_id, score=score, rank=i + 1)
            for i, (score, doc_id) in enumerate(scored[:k])
        ]

    # --- persistence ---

    def save(self, path: str) -> None:
        with self._lock.read_locked():
            blob = self._serialize()
        with open(path, "wb") as fh:
            fh.write(blob)

    def _serialize(self) -> bytes:
        parts = [_MAGIC, struct.pack("<I", _VERSION)]
        parts.append(struct.pack("<dd", self.params.k1, self.params.b))
        parts.append(struct.pack("<BI", int(self.analyzer.emit_cjk_unigrams), self.analyzer.min_latin_len))
        stopwords = sorted(self.analyzer.stopwords)
        parts.append(struct.pack("<I", len(stopwords)))
        for word in stopwords:
            parts.append(_pack_str(word))
        doc_ids = sorted(self._doc_len)
        index_of = {doc_id: i for i, doc_id in enumerate(doc_ids)}
        parts.append(struct.pack("<I", len(doc_ids)))
        for doc_id in doc_ids:
            parts.append(_pack_str(doc_id))
            parts.append(struct.pack("<I", self._doc_len[doc_id]))
        parts.append(struct.pack("<I", len(self._postings)))
        for term in sorted(self._postings):
            entries = self._postings[term]
            parts.append(_pack_str(term))
            parts.append(struct.pack("<I", len(entries)))
            for doc_id in sorted(entries, key=lambda d: index_of[d]):
                parts.append(struct.pack("<II", index_of[doc_id], entries[doc_id]))
        return b"".join(parts)

    @classmethod
    def load(cls, path: str) -> "SparseIndex":
        with open(path, "rb") as fh:
            blob = fh.read()
        reader = _Reader(blob)
        if reader.take(4) != _MAGIC:
            raise FormatError("bad magic; not a sparse index snapshot")
        version = reader.u32()
        if version != _VERSION:
            raise FormatError(f"unsupported snapshot version {version}")
        k1, b = reader.unpack("<dd")
        emit_uni, min_latin = reader.unpack("<BI")
        stopwords = frozenset(reader.string() for _ in range(reader.u32()))
        analyzer = AnalyzerConfig(
            stopwords=stopwords,
            emit_cjk_unigrams=bool(emit_uni),
            min_latin_len=min_latin,
        )
        index = cls(analyzer=analyzer, params=Bm25Params(k1=k1, b=b))
        doc_ids = []
        for _ in range(reader.u32()):
            doc_id = reader.string()
            doc_ids.append(doc_id)
            index._doc_len[doc_id] = reader.u32()
        for _ in range(reader.u32()):
            term = reader.string()
            entries: dict[str, int] = {}
            for _ in range(reader.u32()):
                doc_idx, tf = reader.unpack("<II")
                if doc_idx >= len(doc_ids):
                    raise FormatError("posting entry points outside the doc table")
                entries[doc_ids[doc_idx]] = tf
            index._postings[term] = entries
        reader.expect_end()
        return index


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    """Cursor over snapshot bytes; any overrun becomes FormatError."""

    def __init__(self, blob: bytes) -> None:
        self._blob = blob
        self._pos = 0

    def take(self, n: int) -> bytes:
        end = self._pos + n
        if end > len(self._blob):
            raise FormatError("truncated snapshot")
        chunk = self._blob[self._pos : end]
        self._pos = end
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def u32(self) -> int:
        return self.unpack("<I")[0]

    def string(self) -> str:
        raw = self.take(self.u32())
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("corrupt string payload") from exc

    def expect_end(self) -> None:
        if self._pos != len(self._blob):
            raise FormatError("trailing bytes after snapshot payload")
