"""Post-hoc figures rendered from the delimited analysis outputs.

Reads the CSVs a finished run emitted and writes PNGs next to them. Kept
out of the pipeline commands on purpose: the CSVs are the contract,
figures are a convenience layer over them.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_correlation_heatmap(matrix_csv: Path, out_path: Path) -> Path:
    """Trial-correlation heatmap from the k x k matrix CSV."""
    with open(matrix_csv, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    values = [[float(v) for v in row[1:]] for row in rows[1:]]

    fig, ax = plt.subplots(figsize=(5, 4))
    image = ax.imshow(values, vmin=-1.0, vmax=1.0, cmap="RdYlGn")
    ax.set_xticks(range(len(labels)), labels=labels, rotation=45, ha="right")
    ax.set_yticks(range(len(labels)), labels=labels)
    for i in range(len(labels)):
        for j in range(len(labels)):
            ax.text(j, i, f"{values[i][j]:.2f}", ha="center", va="center", fontsize=8)
    fig.colorbar(image, ax=ax)
    ax.set_title("Pairwise correlation of trial total scores")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_eval_bars(summary_csv: Path, out_path: Path) -> Path:
    """Grouped bar panels (ACC / MCC / RMSE) per model per lookback."""
    with open(summary_csv, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    models = list(dict.fromkeys(row["model"] for row in rows))
    lookbacks = sorted({int(row["lookback"]) for row in rows})
    by_key = {(row["model"], int(row["lookback"])): row for row in rows}

    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    width = 0.8 / max(len(models), 1)
    for ax, metric in zip(axes, ("acc", "mcc", "rmse")):
        for m_idx, model in enumerate(models):
            xs = [l + m_idx * width for l in range(len(lookbacks))]
            ys = [float(by_key[(model, l)][metric]) for l in lookbacks]
            ax.bar(xs, ys, width=width, label=model)
        ax.set_xticks([l + width * (len(models) - 1) / 2 for l in range(len(lookbacks))])
        ax.set_xticklabels([f"l={l}" for l in lookbacks])
        ax.set_title(metric.upper())
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_forecast_series(forecasts_csv: Path, out_path: Path) -> Path:
    """Predicted vs. actual deltas over time, one panel per lookback."""
    with open(forecasts_csv, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    lookbacks = sorted({int(row["lookback"]) for row in rows})

    fig, axes = plt.subplots(len(lookbacks), 1, figsize=(9, 2.8 * len(lookbacks)), squeeze=False)
    for ax, l in zip(axes[:, 0], lookbacks):
        sub = [row for row in rows if int(row["lookback"]) == l]
        dates = [row["date"] for row in sub]
        ax.plot(dates, [float(row["prediction"]) for row in sub], marker="o", label="prediction")
        ax.plot(dates, [float(row["actual"]) for row in sub], marker="x", label="actual")
        ax.set_title(f"lookback {l}")
        ax.tick_params(axis="x", rotation=45, labelsize=7)
        ax.axhline(0.0, color="grey", linewidth=0.6)
    axes[0, 0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_all(output_dir: Path) -> list[Path]:
    """Render every figure whose source CSV exists; returns written paths."""
    output_dir = Path(output_dir)
    figures_dir = output_dir / "analysis" / "figures"
    figures_dir.mkdir(parents=True, exist_ok=True)
    written = []
    correlation = output_dir / "analysis" / "trial_correlation.csv"
    if correlation.exists():
        written.append(render_correlation_heatmap(correlation, figures_dir / "trial_correlation.png"))
    summary = output_dir / "analysis" / "eval_summary.csv"
    if summary.exists():
        written.append(render_eval_bars(summary, figures_dir / "eval_summary.png"))
    forecasts = output_dir / "forecasts.csv"
    if forecasts.exists():
        written.append(render_forecast_series(forecasts, figures_dir / "forecasts.png"))
    return written
