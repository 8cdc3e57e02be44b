"""Product-facing retrieval paths.

Law retrieval embeds the query and runs exact cosine top-k (default 3)
over statute vectors; statutes flagged ineffective stay indexed but are
filtered out at return time, so a validity flip never forces re-embedding.
Case retrieval extracts tf-idf keywords from the query and feeds them to
the BM25 index as a bag of terms; by construction it factorizes exactly
into keyword extraction followed by a sparse search.

Corpora are ingested from JSON Lines, one record per line. Unknown fields
are ignored; a malformed line lands in the error report with its line
number and, unless strict mode is on, the run continues.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field

from .analysis import AnalyzerConfig, tokenize
from .dense import DenseIndex
from .errors import LawdeskError
from .sparse import Bm25Params, SparseIndex, idf
from .types import RetrievalHit

DEFAULT_LAW_K = 3
DEFAULT_CASE_K = 10
DEFAULT_KEYWORDS = 5


@dataclass(frozen=True)
class Statute:
    id: str
    law_name: str
    article_no: str
    text: str
    effective: bool = True


@dataclass(frozen=True)
class CaseDoc:
    id: str
    court: str
    cause_of_action: str
    text: str
    decided_date: _dt.date | None = None


@dataclass(frozen=True)
class IngestLineError:
    line: int
    reason: str


@dataclass
class IngestReport:
    ingested: int = 0
    rejected: int = 0
    errors: list[IngestLineError] = field(default_factory=list)


class IngestAborted(LawdeskError):
    def __init__(self, error: IngestLineError):
        super().__init__(f"line {error.line}: {error.reason}")
        self.line_error = error


def _parse_statute(obj: dict) -> Statute:
    record = Statute(
        id=str(obj["id"]),
        law_name=str(obj.get("law_name", "")),
        article_no=str(obj.get("article_no", "")),
        text=str(obj["text"]),
        effective=bool(obj.get("effective", True)),
    )
    if not record.id:
        raise ValueError("empty id")
    if not record.text:
        raise ValueError("empty text")
    return record


def _parse_case(obj: dict) -> CaseDoc:
    raw_date = obj.get("decided_date")
    decided = _dt.date.fromisoformat(raw_date) if raw_date else None
    record = CaseDoc(
        id=str(obj["id"]),
        court=str(obj.get("court", "")),
        cause_of_action=str(obj.get("cause_of_action", "")),
        text=str(obj["text"]),
        decided_date=decided,
    )
    if not record.id:
        raise ValueError("empty id")
    if not record.text:
        raise ValueError("empty text")
    return record


def _load_jsonl(path: str, parse, strict: bool):
    records = []
    report = IngestReport()
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("line is not a JSON object")
                record = parse(obj)
                if record.id in seen:
                    raise ValueError(f"duplicate id {record.id!r}")
            except (ValueError, KeyError, TypeError) as exc:
                err = IngestLineError(line=lineno, reason=str(exc))
                report.rejected += 1
                report.errors.append(err)
                if strict:
                    raise IngestAborted(err) from exc
                continue
            seen.add(record.id)
            records.append(record)
            report.ingested += 1
    return records, report


def load_statutes_jsonl(path: str, strict: bool = False) -> tuple[list[Statute], IngestReport]:
    return _load_jsonl(path, _parse_statute, strict)


def load_cases_jsonl(path: str, strict: bool = False) -> tuple[list[CaseDoc], IngestReport]:
    return _load_jsonl(path, _parse_case, strict)


class LawRetriever:
    """Dense statute retrieval: embed the query, exact top-k, filter validity."""

    def __init__(self, provider, min_score: float | None = None):
        self.provider = provider
        self.index = DenseIndex(dimension=provider.dimension, min_score=min_score)
        self.statutes: dict[str, Statute] = {}

    def ingest(self, statutes: list[Statute]) -> int:
        if not statutes:
            return 0
        vectors = self.provider.embed_batch([s.text for s in statutes], role="passage")
        for statute, vector in zip(statutes, vectors):
            self.statutes[statute.id] = statute
            self.index.upsert(statute.id, vector)
        return len(statutes)

    def __len__(self) -> int:
        return len(self.statutes)

    def retrieve(self, query: str, k: int = DEFAULT_LAW_K) -> list[tuple[Statute, RetrievalHit]]:
        if not self.statutes:
            return []
        query_vec = self.provider.embed_batch([query], role="query")[0]
        out: list[tuple[Statute, RetrievalHit]] = []
        for hit in self.index.top_k(query_vec, k):
            statute = self.statutes[hit.doc_id]
            if not statute.effective:
                continue
            out.append(
                (statute, RetrievalHit(doc_id=hit.doc_id, score=hit.score, rank=len(out) + 1))
            )
        return out


class CaseRetriever:
    """Keyword extraction then BM25 over the case corpus."""

    def __init__(self, analyzer: AnalyzerConfig | None = None, params: Bm25Params | None = None):
        self.analyzer = analyzer if analyzer is not None else AnalyzerConfig()
        self.index = SparseIndex(analyzer=self.analyzer, params=params)
        self.cases: dict[str, CaseDoc] = {}

    def ingest(self, cases: list[CaseDoc]) -> int:
        for case in cases:
            self.cases[case.id] = case
            self.index.index_doc(case.id, case.text)
        return len(cases)

    def __len__(self) -> int:
        return len(self.cases)

    def extract_keywords(self, query: str, m: int = DEFAULT_KEYWORDS) -> list[str]:
        """Top-m query terms by tf(query) * idf(corpus), ties lexicographic."""
        if m < 1:
            raise ValueError("m must be >= 1")
        counts: dict[str, int] = {}
        for token in tokenize(query, self.analyzer):
            counts[token.surface] = counts.get(token.surface, 0) + 1
        if not counts:
            return []
        stats = self.index.stats()
        scored = [
            (tf * idf(stats.doc_count, stats.doc_freq.get(term, 0)), term)
            for term, tf in counts.items()
        ]
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        return [term for _, term in scored[:m]]

    def retrieve(self, query: str, k: int = DEFAULT_CASE_K) -> list[tuple[CaseDoc, RetrievalHit]]:
        if not self.cases:
            return []
        keywords = self.extract_keywords(query)
        if not keywords:
            return []
        hits = self.index.search(" ".join(keywords), k)
        return [(self.cases[hit.doc_id], hit) for hit in hits]
