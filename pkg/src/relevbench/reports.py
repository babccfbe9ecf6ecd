"""Report persistence: JSON, flat CSV tables, histogram CSVs, and figures.

All delimited output is deterministic for a fixed set of records; figures
are rendered with the Agg backend alongside the CSV files.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from relevbench.cosine_baseline import similarity_histograms


def write_report_json(records, path) -> None:
    """Full-fidelity report; parse -> equals the in-memory record dicts."""
    data = {"records": [r.to_dict() for r in records]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_report_csv(records, path) -> None:
    """Flat table: model, encoding, train_size, metric, mean, se."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "encoding", "train_size", "metric", "mean", "se"])
        for record in records:
            for summary in record.bootstrap:
                writer.writerow([
                    record.model,
                    record.encoding,
                    record.n_train_pairs,
                    summary["metric"],
                    repr(summary["mean"]),
                    repr(summary["se"]),
                ])


def write_timings_json(records, path) -> None:
    """Informational per-stage timings; not part of the deterministic report."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.timings for r in records], fh, indent=2)
        fh.write("\n")


def write_similarity_histogram_csv(similarities, ranks, path, n_bins: int = 20) -> None:
    """Per-class similarity histogram, n_bins rows per class."""
    edges, counts = similarity_histograms(similarities, ranks, n_bins=n_bins)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "bin_lo", "bin_hi", "count"])
        for rank in (0, 1, 2, 3):
            for b in range(n_bins):
                writer.writerow([rank, repr(float(edges[b])),
                                 repr(float(edges[b + 1])), int(counts[rank][b])])


def plot_similarity_histograms(similarities, ranks, path, n_bins: int = 20,
                               thresholds=None) -> None:
    """Overlaid per-class similarity histograms with dashed class means."""
    similarities = np.asarray(similarities, dtype=np.float64)
    ranks = np.asarray(ranks, dtype=np.int64)
    edges, counts = similarity_histograms(similarities, ranks, n_bins=n_bins)
    centers = (edges[:-1] + edges[1:]) / 2
    width = edges[1] - edges[0]
    labels = {3: "most relevant", 2: "second most", 1: "second least", 0: "least"}
    fig, ax = plt.subplots(figsize=(8, 5))
    for rank in (0, 1, 2, 3):
        color = ax.bar(centers, counts[rank], width=width, alpha=0.45,
                       label=labels[rank])[0].get_facecolor()
        class_sims = similarities[ranks == rank]
        if len(class_sims):
            ax.axvline(float(class_sims.mean()), linestyle="--", color=color)
    if thresholds:
        for t in thresholds:
            ax.axvline(t, color="black", linestyle=":", linewidth=1)
    ax.set_xlabel("cosine similarity")
    ax.set_ylabel("count")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_learning_curve(records, path, metric: str = "kendall_tau") -> None:
    """Metric mean with +/- se error bars against training-set size."""
    sizes, means, ses = [], [], []
    for record in records:
        for summary in record.bootstrap:
            if summary["metric"] == metric:
                sizes.append(record.n_train_pairs)
                means.append(summary["mean"])
                ses.append(summary["se"])
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(sizes, means, yerr=ses, marker="o", capsize=3)
    ax.set_xscale("log")
    ax.set_xlabel("training pairs")
    ax.set_ylabel(metric)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_curve_csv(records, path) -> None:
    """Learning-curve table: size, metric, mean, se."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "metric", "mean", "se"])
        for record in records:
            for summary in record.bootstrap:
                writer.writerow([record.n_train_pairs, summary["metric"],
                                 repr(summary["mean"]), repr(summary["se"])])


def emit_report(records, out_dir, similarities=None, ranks=None,
                thresholds=None, curve: bool = False) -> list[str]:
    """Write the full report bundle into out_dir; returns the file list."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    write_report_json(records, path("report.json"))
    write_report_csv(records, path("report.csv"))
    write_timings_json(records, path("timings.json"))
    if curve:
        write_curve_csv(records, path("curve.csv"))
        plot_learning_curve(records, path("learning_curve.png"))
    if similarities is not None and ranks is not None:
        write_similarity_histogram_csv(similarities, ranks,
                                       path("similarity_histogram.csv"))
        plot_similarity_histograms(similarities, ranks,
                                   path("similarity_histogram.png"),
                                   thresholds=thresholds)
    return written
