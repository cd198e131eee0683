"""Evaluation report artifacts: delimited table plus rendered figures."""

from __future__ import annotations

from pathlib import Path

from depolar.evalkit import EvalReport

TSV_COLUMNS = [
    "topic",
    "before_liberal",
    "before_neutral",
    "before_conservative",
    "after_neutral",
    "success_pct",
]


def format_table(report: EvalReport) -> str:
    """Fixed-width text table for stdout."""
    rows = report.table_rows()
    widths = {col: max(len(col), *(len(str(r[col])) for r in rows)) for col in TSV_COLUMNS}
    lines = ["  ".join(col.ljust(widths[col]) for col in TSV_COLUMNS)]
    for row in rows:
        lines.append("  ".join(str(row[col]).ljust(widths[col]) for col in TSV_COLUMNS))
    if report.mean_bleu is not None:
        lines.append("")
        lines.append(f"mean BLEU {report.mean_bleu:.3f} (min {report.min_bleu:.3f}) over {report.n_docs} documents")
        lines.append(f"polarity reduced in {report.polarity_reduced}/{report.modified} modified documents")
    return "\n".join(lines)


def write_tsv(report: EvalReport, path: str) -> None:
    lines = ["\t".join(TSV_COLUMNS)]
    for row in report.table_rows():
        lines.append("\t".join(str(row[col]) for col in TSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_figures(report: EvalReport, out_dir: str) -> list[str]:
    """Success-by-topic bars and before/after label counts, as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r for r in report.rows if r.success is not None]
    rows.sort(key=lambda r: r.topic)
    written = []

    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(rows)), 4))
    topics = [r.topic for r in rows]
    ax.bar(topics, [r.success for r in rows], color="#4878a8")
    ax.axhline(report.overall_success, color="#a84848", linestyle="--", label=f"overall {report.overall_success:.1f}%")
    ax.set_ylabel("success %")
    ax.set_title("Depolarization success rate by topic")
    ax.legend()
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    fig.tight_layout()
    path = out / "success_by_topic.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))

    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(rows)), 4))
    import numpy as np

    x = np.arange(len(rows))
    width = 0.35
    polar_before = [r.before["liberal"] + r.before["conservative"] for r in rows]
    neutral_before = [r.before["neutral"] for r in rows]
    neutral_after = [r.after["neutral"] for r in rows]
    ax.bar(x - width / 2, polar_before, width, label="polar before", color="#a84848")
    ax.bar(x - width / 2, neutral_before, width, bottom=polar_before, label="neutral before", color="#c8c8c8")
    ax.bar(x + width / 2, neutral_after, width, label="neutral after", color="#48a868")
    ax.set_xticks(x)
    ax.set_xticklabels([r.topic for r in rows], rotation=30, ha="right")
    ax.set_ylabel("documents")
    ax.set_title("Classifier labels before vs after rewriting")
    ax.legend()
    fig.tight_layout()
    path = out / "labels_before_after.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(str(path))
    return written


def write_report(report: EvalReport, out_dir: str) -> dict:
    """TSV plus figures under out_dir; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tsv_path = out / "report.tsv"
    write_tsv(report, str(tsv_path))
    figures = render_figures(report, out_dir)
    return {"tsv": str(tsv_path), "figures": figures}
