"""Figure builders. Inputs are sorted before drawing so row order in the
CSVs never changes the output image."""

from __future__ import annotations

import warnings
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    read_miss_distances,
    read_query_frequencies,
    read_results,
    read_topic_popularity,
)

BASELINE_VARIANT = "SDC"

_COLORS = ["tab:red", "tab:blue", "tab:green", "tab:orange", "tab:purple", "tab:brown"]


def _save(fig, out_path):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_hitrate_curves(results_csv, out_path, baseline: str = BASELINE_VARIANT):
    """Hit rate vs static fraction, one curve pair per cache size.

    The baseline variant is dashed, topic-partitioned variants solid. A
    missing variant still produces a figure, with a warning annotation.
    """
    fig = hitrate_figure(read_results(results_csv), baseline)
    return _save(fig, out_path)


def hitrate_figure(rows, baseline: str = BASELINE_VARIANT):
    variants = sorted({r["variant"] for r in rows})
    sizes = sorted({int(r["N"]) for r in rows})

    fig, ax = plt.subplots(figsize=(7, 4.5))
    warn = []
    if baseline not in variants:
        warn.append(f"baseline {baseline} missing from input")
    if not [v for v in variants if v != baseline]:
        warn.append("no topic-partitioned variant in input")

    for i, n in enumerate(sizes):
        color = _COLORS[i % len(_COLORS)]
        for variant in variants:
            points = sorted(
                (float(r["f_s"]), float(r["hit_rate"]))
                for r in rows
                if int(r["N"]) == n and r["variant"] == variant
            )
            if not points:
                continue
            xs, ys = zip(*points)
            style = "--" if variant == baseline else "-"
            ax.plot(xs, ys, style, color=color, marker="o", markersize=3,
                    label=f"{variant} N={n}")
    ax.set_xlabel("static fraction $f_s$")
    ax.set_ylabel("hit rate")
    ax.set_title("Hit rate vs static fraction")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    for j, message in enumerate(warn):
        warnings.warn(message)
        ax.annotate(f"warning: {message}", (0.02, 0.02 + 0.05 * j),
                    xycoords="axes fraction", fontsize=7, color="red")
    return fig


def plot_miss_distance(miss_csv, out_path):
    """Per-topic average miss distances, sorted decreasing, with horizontal
    reference lines for the dynamic-cache distances."""
    fig = miss_distance_figure(read_miss_distances(miss_csv))
    return _save(fig, out_path)


def miss_distance_figure(rows):
    groups = sorted({(r["variant"], int(r["N"])) for r in rows})

    fig, ax = plt.subplots(figsize=(7, 4.5))
    missing_dynamic = True
    for i, (variant, n) in enumerate(groups):
        color = _COLORS[i % len(_COLORS)]
        topics = sorted(
            (
                float(r["avg_miss_distance"])
                for r in rows
                if r["variant"] == variant and int(r["N"]) == n and r["scope"] == "topic"
            ),
            reverse=True,
        )
        if topics:
            ax.plot(range(1, len(topics) + 1), topics, "-", color=color,
                    marker="o", markersize=3, label=f"{variant} N={n} topics")
        for r in rows:
            if r["variant"] == variant and int(r["N"]) == n and r["scope"] == "dynamic":
                ax.axhline(float(r["avg_miss_distance"]), color=color, linestyle=":",
                           label=f"{variant} N={n} dynamic")
                missing_dynamic = False
    if missing_dynamic:
        warnings.warn("no dynamic-scope rows; reference lines omitted")
        ax.annotate("warning: no dynamic-scope rows", (0.02, 0.02),
                    xycoords="axes fraction", fontsize=7, color="red")
    ax.set_xlabel("topic (sorted by decreasing distance)")
    ax.set_ylabel("average miss distance")
    ax.set_title("Per-topic average miss distance")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    return fig


def plot_freq_distribution(events_tsv, out_path):
    """Query frequency vs popularity rank on a log-log scale."""
    freqs = read_query_frequencies(events_tsv)
    ranks = np.arange(1, len(freqs) + 1)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    ax.loglog(ranks, freqs, ".", markersize=2)
    ax.set_xlabel("query rank")
    ax.set_ylabel("frequency")
    ax.set_title("Query frequency distribution")
    ax.grid(alpha=0.3, which="both")
    return _save(fig, out_path)


def plot_topic_popularity(popularity_tsv, out_path):
    """Distinct-query counts per topic, sorted by decreasing popularity."""
    popularity = read_topic_popularity(popularity_tsv)
    counts = sorted(popularity.values(), reverse=True)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    ax.plot(range(1, len(counts) + 1), counts, "-", marker="o", markersize=3)
    ax.set_yscale("log")
    ax.set_xlabel("topic (sorted by popularity)")
    ax.set_ylabel("distinct queries")
    ax.set_title("Topic popularity distribution")
    ax.grid(alpha=0.3, which="both")
    return _save(fig, out_path)
