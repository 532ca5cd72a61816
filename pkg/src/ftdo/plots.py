"""Figure rendering for verification and benchmark reports.

Files only (Agg backend); every report path drops a PNG next to its
delimited output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_space_trend(rows: list[dict], path: str) -> str:
    """bits/(n*f) against f for the oracle (and stream peak when present)."""
    fs = [r["f"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(fs, [r["oracle_bits_per_nf"] for r in rows], "o-", label="oracle")
    if rows and "stream_bits_per_nf" in rows[0]:
        ax.plot(
            fs, [r["stream_bits_per_nf"] for r in rows], "s--", label="stream peak"
        )
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xlabel("fault budget f")
    ax.set_ylabel("measured bits / (n*f)")
    ax.set_title("space per tolerated fault")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_stretch_histogram(values: list[float], path: str, bound: float | None = None) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist([v for v in values if v > 0], bins=20, color="#4878a8", edgecolor="black")
    if bound is not None:
        ax.axvline(bound, color="red", linestyle="--", label=f"bound {bound:g}")
        ax.legend()
    ax.set_xlabel("observed stretch")
    ax.set_ylabel("pairs")
    ax.set_title("stretch distribution")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_trial_overview(report, path: str) -> str:
    """Per-trial max stretch with hard-invariant pass/fail coloring."""
    trials = report.trials
    xs = [t.get("trial", i) for i, t in enumerate(trials)]
    ys = [t.get("max_stretch", t.get("max_edge_stretch", 0)) for t in trials]
    ok = [
        t.get("containment_ok", True)
        and t.get("lower_bound_ok", True)
        and t.get("subgraph_ok", True)
        for t in trials
    ]
    colors = ["#2a9d4e" if o else "#d62828" for o in ok]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(xs, ys, color=colors)
    ax.set_xlabel("trial")
    ax.set_ylabel("max observed stretch")
    name = report.scenario.get("name", "scenario")
    ax.set_title(f"{name}: green = hard invariants hold")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
