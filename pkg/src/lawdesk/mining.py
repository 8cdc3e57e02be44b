"""Contrastive training data for retriever fine-tuning.

Two mining stages produce (query, positives, hard negatives) triplets:
stage one ranks the statute corpus with BM25 and keeps the top non-positive
hits; stage two does the same with dense cosine ranking under the encoder
fine-tuned on stage-one data, identical settings otherwise. The neural
update itself happens in an external trainer; triplets are handed off as
JSON Lines with resolved texts.

The loss functions here exist to verify that hand-off numerically: a
softmax contrastive loss over cosine similarities at temperature tau, with
optional in-batch negatives (other queries' positives), plus its analytic
gradient with respect to every input vector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dense import DenseIndex
from .errors import (
    DanglingId,
    EmptyBatch,
    NonPositiveTemperature,
    UnknownPositiveId,
)
from .retrieval import Statute
from .sparse import SparseIndex

STAGE_ONE = "one"
STAGE_TWO = "two"
DEFAULT_NUM_NEGATIVES = 15
DEFAULT_TEMPERATURE = 0.05


@dataclass(frozen=True)
class TrainingTriplet:
    query: str
    positives: tuple[str, ...]
    hard_negatives: tuple[str, ...]
    stage: str

    def __post_init__(self) -> None:
        overlap = set(self.positives) & set(self.hard_negatives)
        if overlap:
            raise ValueError(f"positives appear among negatives: {sorted(overlap)}")
        if self.stage not in (STAGE_ONE, STAGE_TWO):
            raise ValueError(f"unknown stage {self.stage!r}")


def _take_non_positive(ranked_ids: list[str], positives: set[str], n_neg: int) -> tuple[str, ...]:
    out = []
    for doc_id in ranked_ids:
        if doc_id in positives:
            continue
        out.append(doc_id)
        if len(out) == n_neg:
            break
    return tuple(out)


def mine_stage1(
    query: str,
    positives: list[str],
    n_neg: int,
    index: SparseIndex,
) -> TrainingTriplet:
    """BM25 ranking with positives removed, first n_neg kept."""
    if n_neg < 0:
        raise ValueError("n_neg must be >= 0")
    pos = set(positives)
    for doc_id in positives:
        if doc_id not in index:
            raise UnknownPositiveId(doc_id)
    negatives: tuple[str, ...] = ()
    if n_neg > 0:
        hits = index.search(query, k=n_neg + len(pos))
        negatives = _take_non_positive([h.doc_id for h in hits], pos, n_neg)
    return TrainingTriplet(
        query=query, positives=tuple(positives), hard_negatives=negatives, stage=STAGE_ONE
    )


def mine_stage2(
    query: str,
    positives: list[str],
    n_neg: int,
    index: DenseIndex,
    provider,
) -> TrainingTriplet:
    """Dense nearest neighbors with positives removed, first n_neg kept.

    `index` must hold vectors produced by `provider` (the encoder that came
    out of stage-one fine-tuning) or the ranking is meaningless.
    """
    if n_neg < 0:
        raise ValueError("n_neg must be >= 0")
    pos = set(positives)
    for doc_id in positives:
        if doc_id not in index:
            raise UnknownPositiveId(doc_id)
    negatives: tuple[str, ...] = ()
    if n_neg > 0 and len(index) > 0:
        query_vec = provider.embed_batch([query], role="query")[0]
        hits = index.top_k(query_vec, k=n_neg + len(pos))
        negatives = _take_non_positive([h.doc_id for h in hits], pos, n_neg)
    return TrainingTriplet(
        query=query, positives=tuple(positives), hard_negatives=negatives, stage=STAGE_TWO
    )


# --- contrastive loss ---

@dataclass
class InfoNceBatch:
    """Aligned query/positive vectors plus per-query negative lists."""

    query_vecs: list[np.ndarray]
    pos_vecs: list[np.ndarray]
    neg_vecs: list[list[np.ndarray]]
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self) -> None:
        if not (math.isfinite(self.temperature) and self.temperature > 0):
            raise NonPositiveTemperature(f"temperature {self.temperature!r} must be > 0")
        if not (len(self.query_vecs) == len(self.pos_vecs) == len(self.neg_vecs)):
            raise ValueError("query/positive/negative lists must be aligned")
        self.query_vecs = [np.asarray(v, dtype=np.float64) for v in self.query_vecs]
        self.pos_vecs = [np.asarray(v, dtype=np.float64) for v in self.pos_vecs]
        self.neg_vecs = [[np.asarray(v, dtype=np.float64) for v in negs] for negs in self.neg_vecs]
        dims = {v.shape for v in self.query_vecs + self.pos_vecs}
        dims.update(v.shape for negs in self.neg_vecs for v in negs)
        if len(dims) > 1:
            raise ValueError(f"mixed vector shapes: {sorted(dims)}")


def _cosine_and_parts(q: np.ndarray, v: np.ndarray) -> tuple[float, float, float]:
    nq = float(np.linalg.norm(q))
    nv = float(np.linalg.norm(v))
    return float(q @ v) / (nq * nv), nq, nv


def _candidate_vectors(batch: InfoNceBatch, i: int, in_batch: bool):
    """Candidates for query i: own positive first, then negatives, then
    (optionally) the other queries' positives tagged with their index."""
    cands: list[tuple[str, int, np.ndarray]] = [("pos", i, batch.pos_vecs[i])]
    for j, neg in enumerate(batch.neg_vecs[i]):
        cands.append(("neg", j, neg))
    if in_batch:
        for k in range(len(batch.query_vecs)):
            if k != i:
                cands.append(("inbatch", k, batch.pos_vecs[k]))
    return cands


def _per_query_softmax(batch: InfoNceBatch, i: int, in_batch: bool):
    q = batch.query_vecs[i]
    cands = _candidate_vectors(batch, i, in_batch)
    sims = np.array([_cosine_and_parts(q, v)[0] for _, _, v in cands])
    logits = sims / batch.temperature
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    probs = exp / exp.sum()
    loss = float(np.log(exp.sum()) - shifted[0])
    return loss, probs, cands


def info_nce_loss(batch: InfoNceBatch, in_batch_negatives: bool = False) -> float:
    """Mean softmax contrastive loss; finite and >= 0."""
    n = len(batch.query_vecs)
    if n == 0:
        raise EmptyBatch("batch has no queries")
    total = 0.0
    for i in range(n):
        loss, _, _ = _per_query_softmax(batch, i, in_batch_negatives)
        total += loss
    return total / n


def info_nce_grad(
    batch: InfoNceBatch, in_batch_negatives: bool = False
) -> tuple[list[np.ndarray], list[np.ndarray], list[list[np.ndarray]]]:
    """Analytic gradient of `info_nce_loss` w.r.t. every vector entry.

    Returns (d/d query_vecs, d/d pos_vecs, d/d neg_vecs) with the same
    shapes as the batch. Cosine is differentiated through both arguments,
    norms included.
    """
    n = len(batch.query_vecs)
    if n == 0:
        raise EmptyBatch("batch has no queries")
    grad_q = [np.zeros_like(v) for v in batch.query_vecs]
    grad_p = [np.zeros_like(v) for v in batch.pos_vecs]
    grad_n = [[np.zeros_like(v) for v in negs] for negs in batch.neg_vecs]

    for i in range(n):
        _, probs, cands = _per_query_softmax(batch, i, in_batch_negatives)
        q = batch.query_vecs[i]
        for c, (kind, idx, v) in enumerate(cands):
            # d loss_i / d sim_c, averaged over the batch
            coeff = (probs[c] - (1.0 if c == 0 else 0.0)) / (batch.temperature * n)
            if coeff == 0.0:
                continue
            sim, nq, nv = _cosine_and_parts(q, v)
            d_q = v / (nq * nv) - sim * q / (nq * nq)
            d_v = q / (nq * nv) - sim * v / (nv * nv)
            grad_q[i] += coeff * d_q
            if kind == "pos":
                grad_p[idx] += coeff * d_v
            elif kind == "neg":
                grad_n[i][idx] += coeff * d_v
            else:  # other queries' positives
                grad_p[idx] += coeff * d_v
    return grad_q, grad_p, grad_n


# --- export ---

def export_triplets(
    triplets: list[TrainingTriplet],
    path: str,
    statutes: dict[str, Statute],
) -> int:
    """Write triplets as JSON Lines with statute texts resolved from the store."""

    def text_of(doc_id: str) -> str:
        statute = statutes.get(doc_id)
        if statute is None:
            raise DanglingId(doc_id)
        return statute.text

    lines = []
    for triplet in triplets:
        lines.append(
            json.dumps(
                {
                    "query": triplet.query,
                    "pos": [text_of(d) for d in triplet.positives],
                    "neg": [text_of(d) for d in triplet.hard_negatives],
                    "stage": triplet.stage,
                },
                ensure_ascii=False,
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(line + "\n")
    return len(lines)


def save_triplets(triplets: list[TrainingTriplet], path: str) -> int:
    """Id-form triplets, the `mine` CLI output consumed by export_triplets."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in triplets:
            fh.write(
                json.dumps(
                    {
                        "query": t.query,
                        "positives": list(t.positives),
                        "hard_negatives": list(t.hard_negatives),
                        "stage": t.stage,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    return len(triplets)


def load_triplets(path: str) -> list[TrainingTriplet]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out.append(
                TrainingTriplet(
                    query=obj["query"],
                    positives=tuple(obj["positives"]),
                    hard_negatives=tuple(obj["hard_negatives"]),
                    stage=obj["stage"],
                )
            )
    return out
