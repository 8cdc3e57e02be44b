"""Operator command line.

Every run with the same inputs, flags, and config produces the same
output; the only randomness is behind explicit --seed flags. Usage errors
exit 2, runtime failures exit 1 with a machine-readable `error: {...}`
line on stderr.
"""

from __future__ import annotations

import json
import sys

import click

from .config import AppConfig, load_config
from .embeddings import build_provider
from .errors import LawdeskError
from .evaluation import load_eval_items, format_report_table, report_to_dict, run_eval
from .mining import (
    export_triplets,
    load_triplets,
    mine_stage1,
    mine_stage2,
    save_triplets,
)
from .report import write_eval_outputs, write_router_outputs
from .retrieval import (
    CaseRetriever,
    LawRetriever,
    load_cases_jsonl,
    load_statutes_jsonl,
)
from .router import Intent, LinearRouter, RulesRouter, eval_router, train_linear
from .sparse import SparseIndex
from .dense import DenseIndex


def _fail(code: str, message: str) -> None:
    click.echo(f'error: {json.dumps({"code": code, "message": message}, ensure_ascii=False)}', err=True)
    sys.exit(1)


def _config(path: str | None) -> AppConfig:
    return load_config(path) if path else AppConfig()


def _load_queries(path: str) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def _statute_index(corpus_path: str, cfg: AppConfig) -> tuple[SparseIndex, dict]:
    statutes, _ = load_statutes_jsonl(corpus_path)
    index = SparseIndex(params=cfg.bm25)
    store = {}
    for statute in statutes:
        index.index_doc(statute.id, statute.text)
        store[statute.id] = statute
    return index, store


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Path to the JSON config file.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Legal retrieval pipeline operations."""
    ctx.obj = {"config_path": config_path}


@main.command()
@click.option("--kind", type=click.Choice(["law", "case"]), required=True)
@click.option("--path", "corpus_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--strict", is_flag=True, help="Abort on the first malformed line.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def ingest(ctx, kind: str, corpus_path: str, strict: bool, as_json: bool) -> None:
    """Validate a JSONL corpus and report ingest counts."""
    try:
        loader = load_statutes_jsonl if kind == "law" else load_cases_jsonl
        _, report = loader(corpus_path, strict=strict)
    except LawdeskError as exc:
        _fail("ingest_failed", str(exc))
        return
    payload = {
        "ingested": report.ingested,
        "rejected": report.rejected,
        "errors": [{"line": e.line, "reason": e.reason} for e in report.errors],
    }
    if as_json:
        click.echo(json.dumps(payload, ensure_ascii=False))
    else:
        click.echo(f"ingested={report.ingested} rejected={report.rejected}")
        for err in report.errors:
            click.echo(f"  line {err.line}: {err.reason}")


@main.command("build-index")
@click.argument("index_kind", type=click.Choice(["sparse", "dense"]))
@click.option("--kind", "corpus_kind", type=click.Choice(["law", "case"]), default="law",
              help="Corpus record type (sparse only; dense is always statutes).")
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.pass_context
def build_index(ctx, index_kind: str, corpus_kind: str, corpus: str, out_path: str) -> None:
    """Build a sparse (BM25) or dense (vector) snapshot from a corpus."""
    cfg = _config(ctx.obj["config_path"])
    try:
        if index_kind == "sparse":
            loader = load_statutes_jsonl if corpus_kind == "law" else load_cases_jsonl
            records, _ = loader(corpus)
            index = SparseIndex(params=cfg.bm25)
            for record in records:
                index.index_doc(record.id, record.text)
            index.save(out_path)
            click.echo(f"sparse index: {len(index)} docs -> {out_path}")
        else:
            statutes, _ = load_statutes_jsonl(corpus)
            provider = build_provider(cfg.embedding)
            dense = DenseIndex(dimension=provider.dimension, min_score=cfg.min_score)
            texts = [s.text for s in statutes]
            if texts:
                for statute, vec in zip(statutes, provider.embed_batch(texts, role="passage")):
                    dense.upsert(statute.id, vec)
            dense.save(out_path)
            click.echo(f"dense index: {len(dense)} vectors -> {out_path}")
    except (LawdeskError, OSError) as exc:
        _fail("build_failed", str(exc))


@main.command()
@click.argument("stage", type=click.Choice(["stage1", "stage2"]))
@click.option("--queries", type=click.Path(exists=True, dir_okay=False), required=True,
              help='JSONL: {"query": str, "positives": [ids]} per line.')
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Statute JSONL to mine against.")
@click.option("--nneg", type=int, default=15, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.pass_context
def mine(ctx, stage: str, queries: str, corpus: str, nneg: int, out_path: str) -> None:
    """Mine hard-negative triplets (stage1: BM25, stage2: dense)."""
    cfg = _config(ctx.obj["config_path"])
    try:
        rows = _load_queries(queries)
        triplets = []
        if stage == "stage1":
            index, _ = _statute_index(corpus, cfg)
            for row in rows:
                triplets.append(mine_stage1(row["query"], row["positives"], nneg, index))
        else:
            statutes, _ = load_statutes_jsonl(corpus)
            provider = build_provider(cfg.embedding)
            dense = DenseIndex(dimension=provider.dimension)
            texts = [s.text for s in statutes]
            if texts:
                for statute, vec in zip(statutes, provider.embed_batch(texts, role="passage")):
                    dense.upsert(statute.id, vec)
            for row in rows:
                triplets.append(mine_stage2(row["query"], row["positives"], nneg, dense, provider))
        count = save_triplets(triplets, out_path)
        click.echo(f"mined {count} triplets -> {out_path}")
    except (LawdeskError, OSError, KeyError) as exc:
        _fail("mine_failed", str(exc))


@main.command("export-triplets")
@click.option("--triplets", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
def export_triplets_cmd(triplets: str, corpus: str, out_path: str) -> None:
    """Resolve triplet ids to statute texts and write the training JSONL."""
    try:
        loaded = load_triplets(triplets)
        statutes, _ = load_statutes_jsonl(corpus)
        store = {s.id: s for s in statutes}
        count = export_triplets(loaded, out_path, store)
        click.echo(f"exported {count} triplets -> {out_path}")
    except (LawdeskError, OSError) as exc:
        _fail("export_failed", str(exc))


@main.group(name="eval")
def eval_group() -> None:
    """Evaluation harnesses."""


@eval_group.command("retrieval")
@click.option("--set", "set_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help='JSONL: {"query": str, "relevant_ids": [ids]} per line.')
@click.option("--corpus", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--k", type=int, default=3, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Write JSON/TSV/figures here in addition to stdout.")
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def eval_retrieval(ctx, set_path: str, corpus: str, k: int, out_dir: str | None,
                   figures: bool, as_json: bool) -> None:
    """Evaluate dense statute retrieval (MRR@k / Recall@k)."""
    cfg = _config(ctx.obj["config_path"])
    try:
        items = load_eval_items(set_path)
        statutes, _ = load_statutes_jsonl(corpus)
        provider = build_provider(cfg.embedding)
        retriever = LawRetriever(provider, min_score=cfg.min_score)
        retriever.ingest(statutes)

        def ranked_ids(query: str, depth: int) -> list[str]:
            return [s.id for s, _ in retriever.retrieve(query, depth)]

        report = run_eval(items, ranked_ids, k=k)
    except (LawdeskError, OSError) as exc:
        _fail("eval_failed", str(exc))
        return
    if as_json:
        click.echo(json.dumps(report_to_dict(report), ensure_ascii=False))
    else:
        click.echo(format_report_table(report))
        click.echo(f"MRR@{k} {report.mrr_at_k:.3f}  Recall@{k} {report.recall_at_k:.3f}")
    if out_dir:
        for path in write_eval_outputs(report, out_dir, figures=figures):
            click.echo(f"wrote {path}")


@eval_group.command("router")
@click.option("--set", "set_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help='JSONL: {"message": str, "intent": name} per line.')
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Trained linear model; defaults to the rules router.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None)
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def eval_router_cmd(set_path: str, model_path: str | None, out_dir: str | None,
                    figures: bool, as_json: bool) -> None:
    """Per-class routing accuracy on a labeled set."""
    try:
        labeled = [
            (row["message"], Intent(row["intent"])) for row in _load_queries(set_path)
        ]
        model = LinearRouter.load(model_path) if model_path else RulesRouter()
        report = eval_router(model, labeled)
    except (LawdeskError, OSError, ValueError, KeyError) as exc:
        _fail("eval_failed", str(exc))
        return
    if as_json:
        click.echo(json.dumps({
            "per_class": report.per_class,
            "macro_accuracy": report.macro_accuracy,
            "n_examples": report.n_examples,
        }, ensure_ascii=False))
    else:
        for intent, accuracy in report.per_class.items():
            correct, total = report.per_class_counts[intent]
            click.echo(f"{intent:12s} {accuracy:.3f} ({correct}/{total})")
        click.echo(f"{'macro':12s} {report.macro_accuracy:.3f}")
    if out_dir:
        for path in write_router_outputs(report, out_dir, figures=figures):
            click.echo(f"wrote {path}")


@main.command("train-router")
@click.option("--set", "set_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--epochs", type=int, default=30, show_default=True)
@click.option("--lr", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def train_router_cmd(set_path: str, out_path: str, epochs: int, lr: float, seed: int) -> None:
    """Train the linear router on labeled messages and save the model."""
    try:
        labeled = [(row["message"], Intent(row["intent"])) for row in _load_queries(set_path)]
        model = train_linear(labeled, epochs=epochs, lr=lr, seed=seed)
        model.save(out_path)
    except (LawdeskError, OSError, ValueError, KeyError) as exc:
        _fail("train_failed", str(exc))
        return
    click.echo(f"trained on {len(labeled)} examples, final loss "
               f"{model.epoch_losses[-1]:.4f} -> {out_path}")


@main.command()
@click.option("--text", required=True)
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--json", "as_json", is_flag=True)
def route(text: str, model_path: str | None, as_json: bool) -> None:
    """Classify one message and print its intent."""
    try:
        model = LinearRouter.load(model_path) if model_path else RulesRouter()
        intent, scores = model.classify(text)
    except LawdeskError as exc:
        _fail("route_failed", str(exc))
        return
    if as_json:
        from .router import INTENTS

        click.echo(json.dumps({
            "intent": intent.value,
            "scores": {i.value: float(s) for i, s in zip(INTENTS, scores)},
        }, ensure_ascii=False))
    else:
        click.echo(intent.value)


@main.command()
@click.pass_context
def serve(ctx) -> None:
    """Run the HTTP service (blocking)."""
    from .server import serve as serve_app

    cfg = _config(ctx.obj["config_path"])
    try:
        serve_app(cfg)
    except (LawdeskError, OSError) as exc:
        _fail("serve_failed", str(exc))


if __name__ == "__main__":
    main()
