"""Figure rendering for benchmark and timing reports.

Figures are written straight to files (headless backend); nothing here
opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

plt.rcParams.update(
    {
        "figure.dpi": 150,
        "savefig.dpi": 150,
        "savefig.bbox": "tight",
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
    }
)


def _save(fig, path: str) -> str:
    fig.savefig(path)
    plt.close(fig)
    return path


def render_benchmark_figure(report: dict, path: str) -> str:
    """Mean balanced accuracy per method with one-std error bars."""
    names, means, stds, flags = [], [], [], []
    for name, cell in report["methods"].items():
        if cell["mean"] is None:
            continue
        names.append(name)
        means.append(cell["mean"])
        stds.append(cell["std"] or 0.0)
        flags.append(cell.get("oracle_selection", False))

    fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(names)), 3.2))
    colors = ["#777777" if f else "#3567a6" for f in flags]
    x = range(len(names))
    ax.bar(x, means, yerr=stds, capsize=3, color=colors)
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylabel("balanced accuracy")
    ax.set_ylim(0.0, 1.05)
    ax.axhline(0.5, color="k", linewidth=0.8, linestyle="--")
    reps = report["config"]["reps"]
    ax.set_title(f"mean over {reps} repetitions (grey = oracle selection)")
    return _save(fig, path)


def render_timing_figure(report: dict, path: str) -> str:
    """Selection time against design width, log-log."""
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    for name, cell in report["methods"].items():
        ax.plot(report["p_values"], cell["seconds"], marker="o", label=name)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("design columns p")
    ax.set_ylabel("median fit seconds")
    ax.set_title(f"m={report['m']}, k={report['k']}")
    ax.legend()
    return _save(fig, path)
