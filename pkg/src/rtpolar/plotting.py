"""Matplotlib renderings of the report tables (radar, sizes, flows, score violins)."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

logging.getLogger("matplotlib").setLevel(logging.WARNING)

from rtpolar.metrics import StructureReport  # noqa: E402
from rtpolar.temporal import FlowMatrix  # noqa: E402

# fixed salt and no dates so SVG output is byte-stable
plt.rcParams.update(
    {
        "svg.hashsalt": "rtpolar",
        "font.size": 9,
        "axes.titlesize": 10,
        "legend.fontsize": 7,
        "figure.dpi": 100,
    }
)
_META = {
    ".svg": {"Date": None, "Creator": None},
    ".png": {"Software": None},
    ".pdf": {"CreationDate": None, "ModDate": None, "Creator": None, "Producer": None},
}


def save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, metadata=_META.get(path.suffix, {}), bbox_inches="tight")
    plt.close(fig)
    return path


def radar_figure(observed: StructureReport, baseline: StructureReport, title: str = ""):
    names = list(StructureReport.RADAR_METRICS)
    obs, base = [], []
    for name in names:
        a, b = getattr(observed, name), getattr(baseline, name)
        scale = max(abs(a or 0), abs(b or 0)) or 1.0
        obs.append((a or 0) / scale)
        base.append((b or 0) / scale)
    angles = [2 * math.pi * i / len(names) for i in range(len(names))]
    fig, ax = plt.subplots(figsize=(4.2, 4.2), subplot_kw={"projection": "polar"})
    for vals, style, lab in ((base, "k-", "random G(N, L)"), (obs, "C3--", "observed")):
        ax.plot(angles + angles[:1], vals + vals[:1], style, lw=1.2, label=lab)
    ax.set_xticks(angles)
    ax.set_xticklabels([n.replace("_", " ") for n in names])
    ax.set_ylim(-1, 1)
    ax.set_title(title)
    ax.legend(loc="lower right", bbox_to_anchor=(1.25, -0.1))
    return fig


def size_series_figure(rows: Sequence[tuple[str, str, int]], title: str = "users per community"):
    windows = list(dict.fromkeys(r[0] for r in rows))
    names = sorted({r[1] for r in rows})
    table: dict[str, dict[str, int]] = defaultdict(dict)
    for w, name, n in rows:
        table[name][w] = n
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    bottom = [0] * len(windows)
    for name in names:
        vals = [table[name].get(w, 0) for w in windows]
        ax.bar(windows, vals, bottom=bottom, label=name)
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_xlabel("window")
    ax.set_ylabel("users")
    ax.set_title(title)
    if len(names) <= 20:
        ax.legend(ncol=2, frameon=False)
    return fig


def flow_figure(fm: FlowMatrix, max_targets: int = 7):
    """One bar per next-window community, stacked by previous community."""
    targets = defaultdict(int)
    for (_, t), n in fm.flows.items():
        if t != "EXITED":
            targets[t] += n
    shown = sorted(targets, key=lambda t: (-targets[t], str(t)))[:max_targets]
    sources = sorted({s for (s, t) in fm.flows if t in shown}, key=str)
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    xs = [str(t) for t in shown]
    bottom = [0] * len(shown)
    for s in sources:
        vals = [fm.get(s, t) for t in shown]
        ax.bar(xs, vals, bottom=bottom, label=f"from {s}")
        bottom = [b + v for b, v in zip(bottom, vals)]
    ax.set_xlabel(f"community in {fm.to_window}")
    ax.set_ylabel("users")
    ax.set_title(f"{fm.from_window} → {fm.to_window}")
    ax.legend(ncol=2, frameon=False)
    return fig


def violin_figure(groups: Mapping[str, Sequence[float]], ylabel: str, ylim=(0, 1), title: str = ""):
    names = [k for k, v in groups.items() if len(v)]
    fig, ax = plt.subplots(figsize=(max(3.0, 0.7 * len(names) + 1.5), 3.2))
    if names:
        data = [list(groups[k]) for k in names]
        # violinplot needs spread; single values are drawn as points
        spread = [i for i, d in enumerate(data) if len(set(d)) > 1]
        if spread:
            ax.violinplot([data[i] for i in spread], positions=[i + 1 for i in spread], showmedians=True)
        for i, d in enumerate(data):
            ax.scatter([i + 1] * len(d), d, s=6, c="k", alpha=0.5)
        ax.set_xticks(range(1, len(names) + 1))
        ax.set_xticklabels(names, rotation=30, ha="right")
    ax.set_ylim(*ylim)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return fig
