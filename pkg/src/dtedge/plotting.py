"""Figures for sweep results: energy and cost versus the swept parameter, one line per policy."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

AXIS_LABELS = {
    "servers": "Number of servers, M",
    "max_aoi": r"Maximum AoI, $\Gamma$ (slots)",
    "beta": r"Threshold weight, $\beta$",
}

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (3.5, 2.6),
    "savefig.dpi": 150,
}


def _legend_name(policy: str, beta: str) -> str:
    if policy == "benchmark":
        return r"Benchmark ($\beta$=0)"
    if policy == "boundary":
        return "Boundary"
    if policy == "static_optimal":
        return "Static optimum"
    return rf"$\beta$={float(beta):g}"


def read_rows(csv_path: str | Path) -> list[dict]:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def plot_sweep(csv_path: str | Path, axis: str, out_dir: str | Path | None = None) -> list[Path]:
    """Write ``<stem>_energy.png`` and ``<stem>_cost.png`` next to the CSV (or into ``out_dir``)."""
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir else csv_path.parent
    rows = read_rows(csv_path)
    series: dict[tuple[str, str], list[dict]] = defaultdict(list)
    for row in rows:
        series[(row["policy"], row["beta"])].append(row)

    written = []
    for metric, ci, ylabel, suffix in (
        ("avg_energy_j", "energy_ci", "Average energy (J)", "energy"),
        ("avg_cost", "cost_ci", "Average cost", "cost"),
    ):
        with plt.rc_context(STYLE):
            fig, ax = plt.subplots()
            for (policy, beta), pts in sorted(series.items(), key=lambda kv: (kv[0][0], float(kv[0][1]))):
                pts = sorted(pts, key=lambda r: float(r["sweep_value"]))
                x = [float(r["sweep_value"]) for r in pts]
                y = [float(r[metric]) for r in pts]
                err = [float(r[ci]) for r in pts]
                ax.errorbar(x, y, yerr=err, marker="o", ms=3, capsize=2, label=_legend_name(policy, beta))
            ax.set_xlabel(AXIS_LABELS.get(axis, axis))
            ax.set_ylabel(ylabel)
            ys = [float(r[metric]) for r in rows]
            if ys and min(ys) > 0 and max(ys) / min(ys) > 1e3:
                ax.set_yscale("log")
            if axis == "beta" and any(math.isinf(float(r["sweep_value"])) for r in rows):
                ax.set_xscale("symlog")
            ax.legend(frameon=False)
            fig.tight_layout()
            path = out_dir / f"{csv_path.stem}_{suffix}.png"
            fig.savefig(path)
            plt.close(fig)
            written.append(path)
    return written
