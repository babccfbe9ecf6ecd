"""Kendall's Tau, per-class F1, and bootstrap mean/standard-error estimation.

Tau follows the literal (C - D) / (C + D) form: pairs tied in either
sequence count toward neither C nor D (Goodman-Kruskal style).  A tau-b
variant is available behind a flag for sensitivity checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class KendallResult:
    tau: float
    concordant: int
    discordant: int
    tied: int
    n: int
    degenerate: bool = False  # True when C + D == 0
    variant: str = "gamma"    # "gamma" = (C-D)/(C+D); "tau_b" available


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int
    absent: bool = False  # class missing from both pred and true


@dataclass(frozen=True)
class BootstrapSummary:
    metric: str
    mean: float
    se: float
    n_resamples: int
    seed: int
    resample_unit: str = "instance_group"


def _contingency(pred: np.ndarray, true: np.ndarray) -> np.ndarray:
    """Counts table over the distinct values of each sequence."""
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(true, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(table, (pi, ti), 1)
    return table


def _concordance_counts(table: np.ndarray) -> tuple[int, int]:
    """Concordant and discordant pair counts from a contingency table.

    For cell (i, j), concordant partners live strictly below-right and
    discordant ones strictly below-left; suffix sums make this O(k^2).
    """
    # below[i, j] = sum of table[i+1:, :j+1] cumulated columns
    col_cum = np.cumsum(table, axis=1)
    below = np.zeros_like(table)
    below[:-1] = np.cumsum(col_cum[::-1], axis=0)[-2::-1]
    # concordant partners for (i, j): rows > i, cols > j
    total_below = below[:, -1][:, None]
    conc = np.sum(table * (total_below - below))
    # discordant partners for (i, j): rows > i, cols < j
    below_left = np.zeros_like(table)
    below_left[:, 1:] = below[:, :-1]
    disc = np.sum(table * below_left)
    return int(conc), int(disc)


def kendall_tau(pred, true, variant: str = "gamma") -> KendallResult:
    """Kendall rank correlation between two equal-length rank sequences.

    Counts strictly concordant (C) and strictly discordant (D) unordered
    index pairs.  variant "gamma" returns (C - D) / (C + D) and reports 0
    with a degeneracy flag when every pair is tied; "tau_b" applies the
    tie-corrected denominator.
    """
    pred = np.asarray(pred)
    true = np.asarray(true)
    if pred.shape != true.shape or pred.ndim != 1:
        raise MetricError(f"shape mismatch: {pred.shape} vs {true.shape}")
    n = len(pred)
    if n < 2:
        raise MetricError("need at least 2 observations")
    table = _contingency(pred, true)
    conc, disc = _concordance_counts(table)
    n0 = n * (n - 1) // 2
    tied = n0 - conc - disc
    if variant == "gamma":
        if conc + disc == 0:
            return KendallResult(0.0, conc, disc, tied, n, degenerate=True)
        tau = (conc - disc) / (conc + disc)
    elif variant == "tau_b":
        pred_counts = table.sum(axis=1)
        true_counts = table.sum(axis=0)
        n1 = int(np.sum(pred_counts * (pred_counts - 1) // 2))
        n2 = int(np.sum(true_counts * (true_counts - 1) // 2))
        denom = math.sqrt((n0 - n1) * (n0 - n2))
        if denom == 0:
            return KendallResult(0.0, conc, disc, tied, n, degenerate=True,
                                 variant="tau_b")
        tau = (conc - disc) / denom
    else:
        raise MetricError(f"unknown tau variant {variant!r}")
    return KendallResult(float(tau), conc, disc, tied, n, variant=variant)


def f1_per_class(pred, true, classes=(0, 1, 2, 3)) -> dict[int, ClassScores]:
    """One-vs-rest precision/recall/F1 per class.

    Zero-denominator precision, recall, or F1 is defined as 0; a class
    missing from both sequences is flagged absent.
    """
    pred = np.asarray(pred)
    true = np.asarray(true)
    if pred.shape != true.shape:
        raise MetricError(f"shape mismatch: {pred.shape} vs {true.shape}")
    out = {}
    for cls in classes:
        tp = int(np.sum((pred == cls) & (true == cls)))
        fp = int(np.sum((pred == cls) & (true != cls)))
        fn = int(np.sum((pred != cls) & (true == cls)))
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / support if support > 0 else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall > 0 else 0.0)
        absent = (support == 0) and (tp + fp == 0)
        out[cls] = ClassScores(precision, recall, f1, support, absent=absent)
    return out


def resample_seed(seed: int, index: int) -> np.random.Generator:
    """Per-resample generator derived from (seed, index), order-independent."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def bootstrap(metric_fn, group_ids, pred, true, n_resamples: int = 1000,
              seed: int = 0, metric_name: str = "metric") -> BootstrapSummary:
    """Bootstrap a metric by resampling whole instance groups.

    Groups are drawn with replacement up to the original group count; the
    metric is recomputed on the expanded rows of each resample.  Mean and
    standard error (stdev of the bootstrap distribution) are returned.
    Per-resample seeds are derived from (seed, index) so the result does not
    depend on execution order.
    """
    group_ids = np.asarray(group_ids)
    pred = np.asarray(pred)
    true = np.asarray(true)
    if not (len(group_ids) == len(pred) == len(true)):
        raise MetricError("group_ids, pred, true must have equal length")
    if len(group_ids) == 0:
        raise MetricError("empty input")
    if n_resamples < 1:
        raise MetricError("n_resamples must be >= 1")
    unique_groups, inverse = np.unique(group_ids, return_inverse=True)
    n_groups = len(unique_groups)
    rows_by_group = [np.flatnonzero(inverse == g) for g in range(n_groups)]
    values = np.empty(n_resamples, dtype=np.float64)
    for i in range(n_resamples):
        rng = resample_seed(seed, i)
        chosen = rng.integers(0, n_groups, size=n_groups)
        idx = np.concatenate([rows_by_group[g] for g in chosen])
        values[i] = metric_fn(pred[idx], true[idx])
    return BootstrapSummary(
        metric=metric_name,
        mean=float(values.mean()),
        se=float(values.std()),
        n_resamples=n_resamples,
        seed=seed,
    )


def bootstrap_train(fit_eval_fn, train_instances, sizes, n_resamples: int = 10,
                    seed: int = 0, metric_name: str = "metric") -> list[BootstrapSummary]:
    """Training-set bootstrap: per size, resample instances with replacement,
    refit via fit_eval_fn(instances) -> score, and summarize the scores."""
    ordered = sorted(train_instances, key=lambda inst: inst.instance_id)
    summaries = []
    for size_idx, n_pairs in enumerate(sizes):
        n_instances = -(-n_pairs // 4)
        if n_instances > len(ordered):
            raise MetricError(
                f"size {n_pairs} needs {n_instances} instances, "
                f"only {len(ordered)} available"
            )
        values = np.empty(n_resamples, dtype=np.float64)
        for rep in range(n_resamples):
            rng = np.random.default_rng(np.random.SeedSequence([seed, size_idx, rep]))
            chosen = rng.integers(0, len(ordered), size=n_instances)
            values[rep] = fit_eval_fn([ordered[i] for i in chosen])
        summaries.append(
            BootstrapSummary(
                metric=f"{metric_name}@{4 * n_instances}",
                mean=float(values.mean()),
                se=float(values.std()),
                n_resamples=n_resamples,
                seed=seed,
            )
        )
    return summaries
