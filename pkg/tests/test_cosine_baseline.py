import numpy as np
import pytest

from relevbench.cosine_baseline import (
    BaselineError,
    ThresholdTriple,
    classify_by_thresholds,
    grid_search_thresholds,
    similarity_histograms,
    similarity_table,
)
from relevbench.corpus import expand_pairs, load_instances
from relevbench.embedder import FeatureSource
from relevbench.metrics import kendall_tau

PAPER_TRIPLE = ThresholdTriple(0.275, 0.575, 0.625)


def planted_bands(n_per=100, seed=7, jitter=0.04):
    rng = np.random.default_rng(seed)
    sims, ranks = [], []
    for rank, center in enumerate([0.1, 0.4, 0.6, 0.9]):
        sims.append(rng.uniform(center - jitter, center + jitter, n_per))
        ranks.append(np.full(n_per, rank))
    return np.concatenate(sims), np.concatenate(ranks)


def test_triple_monotonicity_enforced():
    with pytest.raises(BaselineError):
        ThresholdTriple(0.5, 0.3, 0.7)


def test_classify_paper_thresholds():
    assert classify_by_thresholds(0.10, PAPER_TRIPLE)[0] == 0
    assert classify_by_thresholds(0.60, PAPER_TRIPLE)[0] == 2
    assert classify_by_thresholds(0.90, PAPER_TRIPLE)[0] == 3


def test_classify_boundary_lower_inclusive():
    assert classify_by_thresholds(0.575, PAPER_TRIPLE)[0] == 2


def test_classify_monotone_in_similarity():
    sims = np.linspace(-1, 1, 201)
    ranks = classify_by_thresholds(sims, PAPER_TRIPLE)
    assert np.all(np.diff(ranks) >= 0)


def test_similarity_table_identical_vectors(small_dataset):
    pairs = expand_pairs(load_instances(small_dataset))
    source = FeatureSource(mode="concat")
    sims = similarity_table(pairs, source)
    assert len(sims) == len(pairs)
    assert np.all((-1 - 1e-9 <= sims) & (sims <= 1 + 1e-9))


def test_grid_search_recovers_planted_bands():
    sims, ranks = planted_bands()
    triple, train_tau = grid_search_thresholds(sims, ranks, step=0.025)
    assert train_tau == 1.0
    t1, t2, t3 = triple.as_tuple()
    # strict separation of adjacent bands
    assert sims[ranks == 0].max() < t1 <= sims[ranks == 1].min()
    assert sims[ranks == 1].max() < t2 <= sims[ranks == 2].min()
    assert sims[ranks == 2].max() < t3 <= sims[ranks == 3].min()
    # applying the learned triple to fresh draws from the same bands is exact
    test_sims, test_ranks = planted_bands(seed=8)
    pred = classify_by_thresholds(test_sims, triple)
    assert kendall_tau(pred, test_ranks).tau == 1.0
    assert np.array_equal(pred, test_ranks)


def test_grid_search_single_pair_per_class():
    sims = np.array([0.0, 0.3, 0.6, 0.9])
    ranks = np.array([0, 1, 2, 3])
    triple, train_tau = grid_search_thresholds(sims, ranks, step=0.025)
    assert train_tau == 1.0
    pred = classify_by_thresholds(sims, triple)
    assert kendall_tau(pred, ranks).tau == 1.0


def test_grid_search_reported_tau_is_consistent():
    sims, ranks = planted_bands(n_per=30, jitter=0.12, seed=3)
    triple, train_tau = grid_search_thresholds(sims, ranks)
    recomputed = kendall_tau(classify_by_thresholds(sims, triple), ranks).tau
    assert train_tau == pytest.approx(recomputed, abs=1e-12)


def test_grid_search_triple_within_range():
    sims, ranks = planted_bands(n_per=20, seed=5)
    step = 0.025
    triple, _ = grid_search_thresholds(sims, ranks, step=step)
    for t in triple.as_tuple():
        assert sims.min() - step <= t <= sims.max() + step


def test_grid_search_identical_similarities_error():
    with pytest.raises(BaselineError):
        grid_search_thresholds(np.full(8, 0.5), np.tile([0, 1, 2, 3], 2))


def test_histograms_have_20_bins_per_class():
    sims, ranks = planted_bands()
    edges, counts = similarity_histograms(sims, ranks)
    assert len(edges) == 21
    for rank in range(4):
        assert len(counts[rank]) == 20
        assert counts[rank].sum() == np.sum(ranks == rank)
