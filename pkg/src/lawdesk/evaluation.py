"""Retrieval evaluation: MRR@k and Recall@k.

`run_eval` drives any retriever exposing ranked doc ids and aggregates
per-query metrics by arithmetic mean. A failing query aborts the run by
default (silently scoring zeros would bias comparisons); pass
``on_error="zero"`` to score it 0 and continue.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable, Iterable

from .errors import DuplicateRanking, EmptyEvalSet, EvalQueryError, LawdeskError

DEFAULT_K = 3

Retriever = Callable[[str, int], list[str]]


@dataclass(frozen=True)
class EvalItem:
    query: str
    relevant_ids: frozenset[str]

    def __post_init__(self) -> None:
        if not self.relevant_ids:
            raise ValueError("relevant_ids must be non-empty")


@dataclass(frozen=True)
class PerQueryResult:
    query: str
    first_relevant_rank: int | None
    hits_found: int
    relevant_count: int
    mrr: float
    recall: float


@dataclass(frozen=True)
class EvalReport:
    mrr_at_k: float
    recall_at_k: float
    k: int
    n_queries: int
    per_query: tuple[PerQueryResult, ...]


def _check_no_duplicates(ranked: list[str]) -> None:
    if len(set(ranked)) != len(ranked):
        raise DuplicateRanking("ranked ids contain duplicates")


def mrr_at_k(ranked: list[str], relevant: Iterable[str], k: int) -> float:
    """1/rank of the first relevant id within the top k, else 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_no_duplicates(ranked)
    relevant = set(relevant)
    for rank, doc_id in enumerate(ranked[:k], start=1):
        if doc_id in relevant:
            return 1.0 / rank
    return 0.0


def recall_at_k(ranked: list[str], relevant: Iterable[str], k: int) -> float:
    """Fraction of the relevant set found in the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_no_duplicates(ranked)
    relevant = set(relevant)
    return len(set(ranked[:k]) & relevant) / len(relevant)


def run_eval(
    items: list[EvalItem],
    retrieve: Retriever,
    k: int = DEFAULT_K,
    on_error: str = "abort",
) -> EvalReport:
    """Evaluate `retrieve` over `items` at cutoff k."""
    if not items:
        raise EmptyEvalSet("evaluation set is empty")
    if on_error not in ("abort", "zero"):
        raise ValueError("on_error must be 'abort' or 'zero'")
    rows: list[PerQueryResult] = []
    for item in items:
        try:
            ranked = retrieve(item.query, k)
        except LawdeskError as exc:
            if on_error == "abort":
                raise EvalQueryError(item.query) from exc
            rows.append(
                PerQueryResult(
                    query=item.query,
                    first_relevant_rank=None,
                    hits_found=0,
                    relevant_count=len(item.relevant_ids),
                    mrr=0.0,
                    recall=0.0,
                )
            )
            continue
        top = ranked[:k]
        first = None
        for rank, doc_id in enumerate(top, start=1):
            if doc_id in item.relevant_ids:
                first = rank
                break
        rows.append(
            PerQueryResult(
                query=item.query,
                first_relevant_rank=first,
                hits_found=len(set(top) & item.relevant_ids),
                relevant_count=len(item.relevant_ids),
                mrr=mrr_at_k(ranked, item.relevant_ids, k),
                recall=recall_at_k(ranked, item.relevant_ids, k),
            )
        )
    n = len(rows)
    return EvalReport(
        mrr_at_k=sum(r.mrr for r in rows) / n,
        recall_at_k=sum(r.recall for r in rows) / n,
        k=k,
        n_queries=n,
        per_query=tuple(rows),
    )


def load_eval_items(path: str) -> list[EvalItem]:
    """JSON Lines: {"query": str, "relevant_ids": [str, ...]} per line."""
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            items.append(
                EvalItem(query=obj["query"], relevant_ids=frozenset(obj["relevant_ids"]))
            )
    return items


def report_to_dict(report: EvalReport) -> dict:
    return asdict(report)


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), ensure_ascii=False, indent=2)


def format_report_table(report: EvalReport) -> str:
    """Aligned plain-text table, one row per query plus the aggregate line."""
    headers = ("query", "first_rank", "hits", "relevant", f"mrr@{report.k}", f"recall@{report.k}")
    rows = [
        (
            row.query if len(row.query) <= 40 else row.query[:37] + "...",
            "-" if row.first_relevant_rank is None else str(row.first_relevant_rank),
            str(row.hits_found),
            str(row.relevant_count),
            f"{row.mrr:.4f}",
            f"{row.recall:.4f}",
        )
        for row in report.per_query
    ]
    rows.append(
        (
            f"MEAN ({report.n_queries} queries)",
            "",
            "",
            "",
            f"{report.mrr_at_k:.4f}",
            f"{report.recall_at_k:.4f}",
        )
    )
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))]
    def fmt(cells):
        return "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(cells)).rstrip()
    lines = [fmt(headers), fmt(tuple("-" * w for w in widths))]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines)
