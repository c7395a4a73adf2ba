"""Scatter plots of responses against signal and ln(noise) complexity."""
import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config import OKABE_ITO  # noqa: E402
from .evaluation import GROUP_TYPES, harmonize  # noqa: E402

GROUP_COLORS = dict(zip(GROUP_TYPES, (OKABE_ITO["bluish_green"], OKABE_ITO["orange"], OKABE_ITO["blue"])))


class OrphanInstancesError(ValueError):
    def __init__(self, ids):
        self.ids = sorted(ids)
        super().__init__(f"responses reference instances missing from the complexity table: {', '.join(self.ids)}")


def join_responses(complexity_rows, records):
    """Rows of ``(group_type, signal, ln_noise or None, accuracy, time_s)``."""
    table = {r["instance_id"]: r for r in complexity_rows}
    orphans = {iid for rec in records for iid in rec.responses if iid not in table}
    if orphans:
        raise OrphanInstancesError(orphans)
    correct = {iid: r["answer"] for iid, r in table.items()}
    out = []
    for rec in records:
        for iid, (acc, time_s) in sorted(harmonize(rec, correct).items()):
            row = table[iid]
            ln_noise = math.log(row["noise"]) if row["noise"] > 0 else None
            out.append((rec.group_type, row["signal"], ln_noise, acc, time_s))
    return out


def build_figure(joined, title=None):
    """2x2 grid: time (log scale) and accuracy against signal and ln(noise)."""
    fig, axes = plt.subplots(2, 2, figsize=(8, 6.5), sharey="row")
    if not joined:
        for ax in axes.flat:
            ax.set_axis_off()
        fig.text(0.5, 0.5, "no responses", ha="center", va="center")
        return fig
    by_group = defaultdict(list)
    for row in joined:
        by_group[row[0]].append(row)
    for gtype in GROUP_TYPES:
        rows = by_group.get(gtype)
        if not rows:
            continue
        color = GROUP_COLORS[gtype]
        for col, idx in enumerate((1, 2)):
            pts = [(r[idx], r[3], r[4]) for r in rows if r[idx] is not None]
            if not pts:
                continue
            x, acc, t = (np.array(v, dtype=float) for v in zip(*pts))
            for row_i, y in enumerate((t, acc)):
                ax = axes[row_i, col]
                ax.scatter(x, y, s=10, alpha=0.6, color=color, label=gtype.replace("_", " "))
                if len(x) >= 2 and np.ptp(x) > 0:
                    fit_y = np.log(y) if row_i == 0 else y
                    slope, icpt = np.polyfit(x, fit_y, 1)
                    xs = np.linspace(x.min(), x.max(), 20)
                    ys = slope * xs + icpt
                    ax.plot(xs, np.exp(ys) if row_i == 0 else ys, color=color, lw=1.2)
    for col, label in enumerate(("signal complexity", "ln(noise complexity)")):
        axes[1, col].set_xlabel(label)
    axes[0, 0].set_yscale("log")
    axes[0, 0].set_ylabel("completion time (s)")
    axes[1, 0].set_ylabel("accuracy")
    axes[0, 0].legend(fontsize=7, frameon=False)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return fig


def save_svg(fig, path, description=None):
    """Write a self-contained SVG with no timestamp and a fixed id salt."""
    with matplotlib.rc_context({"svg.hashsalt": "taskcomplexity", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None, "Description": description})
    plt.close(fig)
