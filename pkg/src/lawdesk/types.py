"""Result types shared by the sparse and dense indexes."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RetrievalHit:
    """One ranked result: ranks are contiguous from 1, scores non-increasing."""

    doc_id: str
    score: float
    rank: int
