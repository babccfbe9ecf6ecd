"""Fixed-threshold cosine-similarity classifier and its exhaustive grid search.

Three monotone thresholds (t1 <= t2 <= t3) partition the similarity axis
into four rank bands.  The search enumerates every monotone triple on a
lattice from min(sim) to max(sim) with a fixed step and keeps the triple
maximizing Kendall's Tau against the true ranks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from relevbench.embedder import FeatureSource, cosine
from relevbench.metrics import kendall_tau

DEFAULT_STEP = 0.025


class BaselineError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdTriple:
    t1: float
    t2: float
    t3: float

    def __post_init__(self):
        if not self.t1 <= self.t2 <= self.t3:
            raise BaselineError(
                f"thresholds must be monotone, got ({self.t1}, {self.t2}, {self.t3})"
            )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.t1, self.t2, self.t3)


def similarity_table(pairs, source: FeatureSource) -> np.ndarray:
    """Cosine similarity between the separate prompt and paper embeddings,
    one score per pair record, aligned with the input order."""
    return np.array(
        [cosine(source.prompt_vector(p), source.candidate_vector(p)) for p in pairs]
    )


def classify_by_thresholds(similarities, triple: ThresholdTriple) -> np.ndarray:
    """Rank bands, lower-inclusive: 0 below t1, 1 in [t1,t2), 2 in [t2,t3),
    3 at or above t3."""
    sims = np.atleast_1d(np.asarray(similarities, dtype=np.float64))
    edges = np.array(triple.as_tuple())
    return np.searchsorted(edges, sims, side="right")


def grid_search_thresholds(similarities, ranks, step: float = DEFAULT_STEP
                           ) -> tuple[ThresholdTriple, float]:
    """Exhaustive monotone-triple search maximizing Kendall's Tau.

    The lattice runs from min(sim) to max(sim) inclusive with the given step.
    Only monotone triples are enumerated (a non-monotone triple classifies
    identically to its sorted counterpart).  Because tied pairs are excluded
    from the tau denominator, triples that collapse adjacent bands can tie
    the maximum; equal-tau ties therefore prefer the triple with the most
    untied (concordant + discordant) pairs, then the lexicographically
    smallest one.  Returns (triple, training tau).
    """
    sims = np.asarray(similarities, dtype=np.float64)
    ranks = np.asarray(ranks, dtype=np.int64)
    if len(sims) != len(ranks):
        raise BaselineError("similarities and ranks must have equal length")
    lo, hi = float(sims.min()), float(sims.max())
    if hi - lo <= 0:
        raise BaselineError("all similarities identical: no informative grid")
    grid = np.arange(lo, hi + step / 2, step)
    m = len(grid)

    # Histogram over (number of grid points <= sim) x true rank; each band of
    # a triple is then a contiguous slice, so tau per triple is O(grid).
    position = np.searchsorted(grid, sims, side="right")
    hist = np.zeros((m + 1, 4), dtype=np.int64)
    np.add.at(hist, (position, ranks), 1)
    cum = np.cumsum(hist, axis=0)  # cum[p] = rows with position <= p
    total = cum[-1]

    best = None
    best_tau = -np.inf
    best_effective = -1
    for a in range(m):
        band0 = cum[a]
        for b in range(a, m):
            band1 = cum[b] - cum[a]
            for c in range(b, m):
                band2 = cum[c] - cum[b]
                band3 = total - cum[c]
                tau, effective = _tau_from_bands(
                    np.stack([band0, band1, band2, band3])
                )
                # lexicographic iteration order: strict improvement keeps
                # the smallest triple among exact ties
                if tau > best_tau or (tau == best_tau and effective > best_effective):
                    best_tau = tau
                    best_effective = effective
                    best = (grid[a], grid[b], grid[c])
    triple = ThresholdTriple(*[float(t) for t in best])
    return triple, float(best_tau)


def _tau_from_bands(table: np.ndarray) -> tuple[float, int]:
    """((C - D) / (C + D), C + D) from a predicted-band x true-rank table."""
    conc = 0
    disc = 0
    k = table.shape[0]
    rows_below = np.cumsum(table[::-1], axis=0)[::-1]
    for i in range(k):
        if i + 1 < k:
            below = rows_below[i + 1]
        else:
            below = np.zeros(4, dtype=np.int64)
        below_cum = np.cumsum(below)
        total_below = below_cum[-1]
        for j in range(4):
            n_ij = table[i, j]
            if n_ij == 0:
                continue
            conc += n_ij * (total_below - below_cum[j])
            disc += n_ij * (below_cum[j] - below[j])
    if conc + disc == 0:
        return 0.0, 0
    return (conc - disc) / (conc + disc), int(conc + disc)


def similarity_histograms(similarities, ranks, n_bins: int = 20):
    """Per-class histograms over a shared bin range (default 20 bins).

    Returns (bin_edges, {rank: counts}).
    """
    sims = np.asarray(similarities, dtype=np.float64)
    ranks = np.asarray(ranks, dtype=np.int64)
    edges = np.histogram_bin_edges(sims, bins=n_bins)
    counts = {}
    for rank in (0, 1, 2, 3):
        counts[rank], _ = np.histogram(sims[ranks == rank], bins=edges)
    return edges, counts
