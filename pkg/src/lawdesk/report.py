"""Report rendering: JSON, tab-delimited tables, and matplotlib figures.

Every eval run can drop four artifacts into an output directory: the full
report as JSON, per-query rows as TSV, and two PNG figures (metric summary
bars and the distribution of first-relevant ranks). Router evaluations get
the same treatment with per-class accuracy bars.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import EvalReport, format_report_table, report_to_json
from .router import RouterReport


def write_eval_outputs(
    report: EvalReport,
    out_dir: str,
    basename: str = "retrieval_eval",
    figures: bool = True,
) -> list[str]:
    """Write report artifacts; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    json_path = os.path.join(out_dir, f"{basename}.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        fh.write(report_to_json(report) + "\n")
    written.append(json_path)

    tsv_path = os.path.join(out_dir, f"{basename}.tsv")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("query\tfirst_relevant_rank\thits_found\trelevant_count\tmrr\trecall\n")
        for row in report.per_query:
            first = "" if row.first_relevant_rank is None else str(row.first_relevant_rank)
            fh.write(
                f"{row.query}\t{first}\t{row.hits_found}\t{row.relevant_count}"
                f"\t{row.mrr:.6f}\t{row.recall:.6f}\n"
            )
    written.append(tsv_path)

    if figures:
        written.append(_metric_bars(report, os.path.join(out_dir, f"{basename}_metrics.png")))
        written.append(_rank_histogram(report, os.path.join(out_dir, f"{basename}_ranks.png")))
    return written


def _metric_bars(report: EvalReport, path: str) -> str:
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    names = [f"MRR@{report.k}", f"Recall@{report.k}"]
    values = [report.mrr_at_k, report.recall_at_k]
    bars = ax.bar(names, values, color=["#4c72b0", "#55a868"], width=0.55)
    for bar, value in zip(bars, values):
        ax.annotate(
            f"{value:.3f}",
            (bar.get_x() + bar.get_width() / 2, value),
            ha="center",
            va="bottom",
            fontsize=9,
        )
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("score")
    ax.set_title(f"Retrieval metrics ({report.n_queries} queries)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _rank_histogram(report: EvalReport, path: str) -> str:
    counts = [0] * (report.k + 1)  # index 0 = miss
    for row in report.per_query:
        if row.first_relevant_rank is None:
            counts[0] += 1
        else:
            counts[row.first_relevant_rank] += 1
    labels = ["miss"] + [str(r) for r in range(1, report.k + 1)]
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.bar(labels, counts, color="#4c72b0")
    ax.set_xlabel("rank of first relevant result")
    ax.set_ylabel("queries")
    ax.set_title(f"First-relevant rank distribution (k={report.k})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_router_outputs(
    report: RouterReport,
    out_dir: str,
    basename: str = "router_eval",
    figures: bool = True,
) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    written = []

    tsv_path = os.path.join(out_dir, f"{basename}.tsv")
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("intent\tcorrect\ttotal\taccuracy\n")
        for intent, accuracy in report.per_class.items():
            correct, total = report.per_class_counts[intent]
            fh.write(f"{intent}\t{correct}\t{total}\t{accuracy:.6f}\n")
        fh.write(f"macro\t\t{report.n_examples}\t{report.macro_accuracy:.6f}\n")
    written.append(tsv_path)

    if figures:
        fig_path = os.path.join(out_dir, f"{basename}_accuracy.png")
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        names = list(report.per_class)
        values = [report.per_class[n] for n in names]
        ax.bar(names, values, color="#4c72b0")
        ax.axhline(report.macro_accuracy, color="#c44e52", linestyle="--", linewidth=1,
                   label=f"macro {report.macro_accuracy:.3f}")
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("accuracy")
        ax.set_title(f"Router accuracy ({report.n_examples} examples)")
        ax.tick_params(axis="x", labelrotation=20)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(fig_path, dpi=150)
        plt.close(fig)
        written.append(fig_path)
    return written
