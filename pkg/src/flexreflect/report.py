"""Tables, CSV files and figures for completed runs."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List, Optional, Sequence

from .evaluation import TYPE_ORDER, MetricsReport, ReportError, success_rate
from .memory import TraceError, load_run

ABSENT = "absent"
SR_COLUMNS = TYPE_ORDER + ["ALL"]
FLEX_COLUMNS = ["AVE", "STD", "Recall_exp", "Precision_corr"]


def _pct(value: Optional[float]) -> str:
    return ABSENT if value is None else f"{100 * value:.1f}"


def load_report(run_dir) -> MetricsReport:
    """Recompute the metrics of a run directory from its trace."""
    path = Path(run_dir) / "run.jsonl"
    if not path.exists():
        raise ReportError(f"no trace at {path}")
    try:
        log = load_run(path)
    except TraceError as exc:
        raise ReportError(str(exc)) from None
    return success_rate(log)


def sr_rows(reports: Sequence[MetricsReport]) -> List[List[str]]:
    rows = []
    for r in reports:
        cells = [_pct(r.per_type.get(t)) if t in r.per_type else "-" for t in TYPE_ORDER]
        rows.append([r.strategy] + cells + [_pct(r.overall)])
    return rows


def flex_rows(reports: Sequence[MetricsReport]) -> List[List[str]]:
    rows = []
    for r in reports:
        if r.n_reflections == 0:
            rows.append([r.strategy] + [ABSENT] * len(FLEX_COLUMNS))
            continue
        rows.append(
            [
                r.strategy,
                f"{r.flexibility_ave:.1f}",
                f"{r.flexibility_std:.1f}",
                _pct(r.recall_exp),
                _pct(r.precision_corr),
            ]
        )
    return rows


def format_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(h)), *(len(str(row[i])) for row in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(str(h).ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def render_tables(reports: Sequence[MetricsReport]) -> str:
    sr = format_table(["strategy"] + SR_COLUMNS, sr_rows(reports))
    flex = format_table(["strategy"] + FLEX_COLUMNS, flex_rows(reports))
    return f"Success rate (%)\n{sr}\n\nReflection flexibility and efficiency\n{flex}\n"


def _write_csv(path: Path, headers, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(headers)
        w.writerows(rows)


def _blank(value) -> str:
    return "" if value is None else f"{value:.6g}"


def write_report(report: MetricsReport, out_dir) -> None:
    """summary.json, per-task and episode-curve CSVs, tables and the curve figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    _write_csv(
        out / "tasks.csv",
        ["task", "type", "episodes_used", "success", "recall", "precision", "reflection_lengths"],
        [
            [t.task, t.task_type, t.episodes_used, int(t.success), _blank(t.recall), _blank(t.precision),
             " ".join(map(str, t.reflection_lengths))]
            for t in report.tasks
        ],
    )
    _write_curve_csv(out / "episode_curve.csv", report)
    _write_csv(out / "sr_table.csv", ["strategy"] + SR_COLUMNS, sr_rows([report]))
    _write_csv(out / "flexibility_table.csv", ["strategy"] + FLEX_COLUMNS, flex_rows([report]))
    plot_curves([report], out / "episode_curve.png")


def _write_curve_csv(path: Path, report: MetricsReport) -> None:
    n = max(report.n_tasks, 1)
    rows = []
    for e in range(report.ep_total):
        rows.append(
            [
                e + 1,
                report.episode_curve[e],
                f"{report.episode_curve[e] / n:.6g}",
                _blank(report.recall_by_episode[e]),
                _blank(report.precision_by_episode[e]),
            ]
        )
    _write_csv(path, ["episode", "successes", "success_rate", "recall", "precision"], rows)


def plot_curves(reports: Sequence[MetricsReport], path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_sr, ax_eff) = plt.subplots(1, 2, figsize=(10, 4))
    for r in reports:
        xs = list(range(1, r.ep_total + 1))
        ax_sr.plot(xs, [c / max(r.n_tasks, 1) for c in r.episode_curve], marker="o", label=r.strategy)
        for series, style, name in ((r.recall_by_episode, "-", "recall"), (r.precision_by_episode, "--", "precision")):
            pts = [(x, v) for x, v in zip(xs, series) if v is not None]
            if pts:
                ax_eff.plot(*zip(*pts), style, marker="o", label=f"{r.strategy} {name}")
    ax_sr.set(xlabel="episode", ylabel="cumulative success rate", ylim=(0, 1.05), title="Success rate")
    ax_eff.set(xlabel="episode", ylabel="ratio", ylim=(0, 1.05), title="Reflection efficiency")
    for ax in (ax_sr, ax_eff):
        ax.grid(alpha=0.3)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def report(run_dirs: Sequence, out_dir=None) -> str:
    """Render the tables for one run, or a side-by-side comparison of several."""
    if not run_dirs:
        raise ReportError("no run directory given")
    reports = [load_report(d) for d in run_dirs]
    text = render_tables(reports)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "sr_table.csv", ["strategy"] + SR_COLUMNS, sr_rows(reports))
        _write_csv(out / "flexibility_table.csv", ["strategy"] + FLEX_COLUMNS, flex_rows(reports))
        for i, r in enumerate(reports, 1):
            _write_curve_csv(out / f"episode_curve_{i}.csv", r)
        plot_curves(reports, out / "comparison.png")
        (out / "tables.txt").write_text(text, encoding="utf-8")
    return text
