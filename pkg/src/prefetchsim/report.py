"""Report rendering: figures plus a combined summary CSV from stats files.

Reads one or more stats CSVs produced by `run`/`sweep`, writes a merged
summary.csv, and renders PNG figures next to it:

  * metrics.png    - coverage, accuracy, overprediction rate per experiment
  * rewards.png    - stacked reward-level mix per experiment
  * bandwidth.png  - mean bandwidth usage per experiment
  * qvalues_vault<i>.png - per-vault Q heatmaps, when a Q snapshot is given
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiment import CSV_COLUMNS, REWARD_COLUMNS

_REWARD_COLORS = {
    "reward_accurate_timely": "#2e7d32",
    "reward_accurate_late": "#81c784",
    "reward_coverage_loss": "#8d6e63",
    "reward_inaccurate_high_bw": "#c62828",
    "reward_inaccurate_low_bw": "#ef9a9a",
    "reward_no_prefetch_high_bw": "#455a64",
    "reward_no_prefetch_low_bw": "#b0bec5",
}


def _read_stats(paths) -> list:
    rows = []
    for path in paths:
        with open(path) as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise ValueError(f"{path}: not a stats CSV (missing columns {missing})")
            rows.extend(reader)
    if not rows:
        raise ValueError("stats files contain no rows")
    return rows


def _labels(rows) -> list:
    return [f"{r['trace']}\n{r['prefetcher']}" for r in rows]


def _metrics_figure(rows, out_path) -> None:
    labels = _labels(rows)
    x = range(len(rows))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(rows)), 4))
    ax.bar([i - width for i in x], [float(r["coverage"]) for r in rows],
           width, label="coverage", color="#1565c0")
    ax.bar(list(x), [float(r["accuracy"]) for r in rows],
           width, label="accuracy", color="#2e7d32")
    ax.bar([i + width for i in x], [float(r["overprediction_rate"]) for r in rows],
           width, label="overprediction", color="#c62828")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("fraction of baseline misses / issued prefetches")
    ax.axhline(0.0, color="black", linewidth=0.6)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _rewards_figure(rows, out_path) -> None:
    labels = _labels(rows)
    x = list(range(len(rows)))
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(rows)), 4))
    bottoms = [0] * len(rows)
    for name, _ in REWARD_COLUMNS:
        counts = [int(r[name]) for r in rows]
        ax.bar(x, counts, 0.6, bottom=bottoms, label=name.removeprefix("reward_"),
               color=_REWARD_COLORS[name])
        bottoms = [b + c for b, c in zip(bottoms, counts)]
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("reward assignments")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _bandwidth_figure(rows, out_path) -> None:
    labels = _labels(rows)
    x = list(range(len(rows)))
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(rows)), 3.2))
    ax.bar(x, [float(r["mean_bandwidth_usage"]) for r in rows], 0.6, color="#6a1b9a")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("mean bandwidth usage")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _qvalue_figures(snapshot_path, out_dir: Path) -> list:
    # snapshot rows: vault, plane, bin, action_index, offset, q_value
    vault_tables = defaultdict(dict)  # vault -> (bin, action) -> summed q
    offsets = {}
    with open(snapshot_path) as fh:
        for row in csv.DictReader(fh):
            vault = int(row["vault"])
            key = (int(row["bin"]), int(row["action_index"]))
            vault_tables[vault][key] = vault_tables[vault].get(key, 0.0) + float(row["q_value"])
            offsets[int(row["action_index"])] = int(row["offset"])
    written = []
    for vault, cells in sorted(vault_tables.items()):
        bins = 1 + max(b for b, _ in cells)
        actions = 1 + max(a for _, a in cells)
        grid = [[cells.get((b, a), 0.0) for a in range(actions)] for b in range(bins)]
        fig, ax = plt.subplots(figsize=(6, 5))
        image = ax.imshow(grid, aspect="auto", cmap="viridis", interpolation="nearest")
        ax.set_xlabel("prefetch offset")
        ax.set_xticks(range(actions))
        ax.set_xticklabels([offsets.get(a, a) for a in range(actions)], fontsize=7, rotation=90)
        ax.set_ylabel("feature bin")
        ax.set_title(f"vault {vault}: Q (summed over planes)")
        fig.colorbar(image, ax=ax, label="Q value")
        fig.tight_layout()
        out_path = out_dir / f"qvalues_vault{vault}.png"
        fig.savefig(out_path, dpi=150)
        plt.close(fig)
        written.append(out_path)
    return written


def render_report(stats_paths, out_dir, q_snapshot=None) -> list:
    """Render all report outputs; returns the list of files written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = _read_stats(stats_paths)

    written = []
    summary = out / "summary.csv"
    with open(summary, "w", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row[c] for c in CSV_COLUMNS})
    written.append(summary)

    for name, figure in (("metrics.png", _metrics_figure),
                         ("rewards.png", _rewards_figure),
                         ("bandwidth.png", _bandwidth_figure)):
        path = out / name
        figure(rows, path)
        written.append(path)

    if q_snapshot:
        written.extend(_qvalue_figures(q_snapshot, out))
    return written
