"""Figure for the LoC report."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import LocReport  # noqa: E402


def plot_loc(reports: dict[str, LocReport], path) -> None:
    """Stacked Tydi-lang parts next to the generated VHDL, one group per design."""
    names = list(reports)
    xs = range(len(names))
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(names) + 2), 4.0))
    q = [reports[n].loc_q for n in names]
    f = [reports[n].loc_f for n in names]
    s = [reports[n].loc_s for n in names]
    v = [reports[n].loc_vhdl for n in names]
    left = [x - 0.2 for x in xs]
    right = [x + 0.2 for x in xs]
    ax.bar(left, q, 0.4, label="query (LoC_q)")
    ax.bar(left, f, 0.4, bottom=q, label="fletcher (LoC_f)")
    ax.bar(left, s, 0.4, bottom=[a + b for a, b in zip(q, f)], label="stdlib (LoC_s)")
    ax.bar(right, v, 0.4, label="VHDL (LoC_vhdl)")
    for x, n in zip(right, names):
        r = reports[n]
        ax.annotate(f"R_q={r.r_q}\nR_a={r.r_a}", (x, r.loc_vhdl), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(names)
    ax.set_ylabel("lines of code")
    ax.legend(fontsize=8)
    ax.margins(y=0.2)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
