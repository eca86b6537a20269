"""Figure rendering for the analysis report.

Bar charts of the per-source structural metrics are written as PNG files
next to the delimited report.  PNG output carries no timestamps, so
rerunning with identical inputs reproduces identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import MetricsReport

_PNG_META = {"Software": "treeprobe"}


def _bar_figure(labels, values, title, ylabel, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(labels)), 3.2))
    ax.bar(range(len(labels)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_PNG_META)
    plt.close(fig)


def render_report_figures(report: MetricsReport, outdir) -> list[Path]:
    """Render one figure per metric; returns the created paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sources = sorted(report.per_source)
    written = []

    path = outdir / "neighboring.png"
    _bar_figure(
        sources,
        [report.per_source[s].neighboring for s in sources],
        "Neighboring-connection proportion",
        "proportion",
        path,
    )
    written.append(path)

    with_asd = [s for s in sources if report.per_source[s].asd is not None]
    if with_asd:
        path = outdir / "asd.png"
        _bar_figure(
            with_asd,
            [report.per_source[s].asd for s in with_asd],
            "Aspect-sentiment distance",
            "mean tree distance",
            path,
        )
        written.append(path)

    with_pasd = [s for s in sources if report.per_source[s].pasd is not None]
    if with_pasd:
        path = outdir / "pasd.png"
        _bar_figure(
            with_pasd,
            [report.per_source[s].pasd for s in with_pasd],
            "Paired aspect-sentiment distance",
            "mean tree distance",
            path,
        )
        written.append(path)
    return written
