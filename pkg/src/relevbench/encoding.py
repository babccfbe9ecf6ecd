"""Label codecs and readout rules for the four relevance ranks.

One-hot: 4-bit label, single 1 at the rank's index; read out per pair via
argmax over logits.  Thermometer: 3-bit ordinal label where bit k = 1 iff
rank > k; read out per group by summing per-bit probabilities of all four
candidates and ranking the sums (3 for the highest sum down to 0).
"""

from __future__ import annotations

import numpy as np

ONEHOT = "onehot"
THERMOMETER = "thermometer"
SCHEMES = (ONEHOT, THERMOMETER)

N_RANKS = 4


class EncodingError(ValueError):
    pass


def encode_onehot(rank: int) -> np.ndarray:
    """rank -> binary 4-vector with a 1 at the rank's index."""
    if rank not in (0, 1, 2, 3):
        raise EncodingError(f"rank must be in 0..3, got {rank}")
    vec = np.zeros(4, dtype=np.int64)
    vec[rank] = 1
    return vec


def encode_thermometer(rank: int) -> np.ndarray:
    """rank -> 3-bit vector where bit k = 1 iff rank > k."""
    if rank not in (0, 1, 2, 3):
        raise EncodingError(f"rank must be in 0..3, got {rank}")
    return (rank > np.arange(3)).astype(np.int64)


def readout_onehot(scores) -> int:
    """Index of the largest score; ties break toward the lowest index."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (4,):
        raise EncodingError(f"one-hot readout expects 4 scores, got shape {scores.shape}")
    if not np.all(np.isfinite(scores)):
        raise EncodingError("one-hot readout requires finite scores")
    return int(np.argmax(scores))


def readout_thermometer_grouped(score_vectors) -> list[int]:
    """Rank four thermometer score vectors from one prompt group.

    Each candidate's three per-bit probabilities are summed; the largest sum
    gets rank 3, then 2, 1, 0.  Ties break by ascending candidate index, so
    the output is always a permutation of {0, 1, 2, 3}.
    """
    scores = np.asarray(score_vectors, dtype=np.float64)
    if scores.shape != (4, 3):
        raise EncodingError(
            f"grouped readout expects 4 vectors of 3 probabilities, got shape {scores.shape}"
        )
    sums = scores.sum(axis=1)
    # Stable sort ascending: earliest index wins the higher rank on ties.
    order = np.argsort(-sums, kind="stable")
    ranks = [0, 0, 0, 0]
    for position, candidate in enumerate(order):
        ranks[candidate] = 3 - position
    return ranks


def readout_thermometer_ungrouped(probabilities) -> int:
    """Per-pair rank: count of bits with probability strictly above 0.5."""
    probs = np.asarray(probabilities, dtype=np.float64)
    if probs.shape != (3,):
        raise EncodingError(
            f"ungrouped readout expects 3 probabilities, got shape {probs.shape}"
        )
    return int(np.sum(probs > 0.5))


def encode_labels(ranks, scheme: str) -> np.ndarray:
    """Vectorized label matrix for a rank sequence under the given scheme."""
    ranks = np.asarray(ranks, dtype=np.int64)
    if scheme == ONEHOT:
        return np.stack([encode_onehot(int(r)) for r in ranks])
    if scheme == THERMOMETER:
        return np.stack([encode_thermometer(int(r)) for r in ranks])
    raise EncodingError(f"unknown scheme {scheme!r}")


def label_width(scheme: str) -> int:
    if scheme == ONEHOT:
        return 4
    if scheme == THERMOMETER:
        return 3
    raise EncodingError(f"unknown scheme {scheme!r}")
