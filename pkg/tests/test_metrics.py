import numpy as np
import pytest

from relevbench import metrics
from relevbench.metrics import (
    MetricError,
    bootstrap,
    bootstrap_train,
    f1_per_class,
    kendall_tau,
)

from conftest import brute_force_tau, confusion_matrix_f1


def test_tau_perfect_and_reversed():
    assert kendall_tau([0, 1, 2, 3], [0, 1, 2, 3]).tau == 1.0
    assert kendall_tau([3, 2, 1, 0], [0, 1, 2, 3]).tau == -1.0


def test_tau_derived_counts():
    result = kendall_tau([0, 2, 1, 3], [0, 1, 2, 3])
    assert result.concordant == 5
    assert result.discordant == 1
    assert result.tau == pytest.approx(0.6667, abs=1e-4)


def test_tau_matches_brute_force_oracle():
    rng = np.random.default_rng(12)
    for _ in range(200):
        n = int(rng.integers(2, 51))
        # heavy ties: small value alphabets
        alphabet = int(rng.integers(2, 6))
        pred = rng.integers(0, alphabet, size=n)
        true = rng.integers(0, alphabet, size=n)
        expected, conc, disc = brute_force_tau(pred, true)
        result = kendall_tau(pred, true)
        assert result.concordant == conc
        assert result.discordant == disc
        assert result.tau == pytest.approx(expected, abs=1e-12)


def test_tau_all_tied_degenerate():
    result = kendall_tau([1, 1, 1], [0, 1, 2])
    assert result.tau == 0.0
    assert result.degenerate


def test_tau_symmetric_and_relabel_invariant():
    rng = np.random.default_rng(5)
    for _ in range(50):
        pred = rng.integers(0, 4, size=20)
        true = rng.integers(0, 4, size=20)
        assert kendall_tau(pred, true).tau == kendall_tau(true, pred).tau
        # strictly increasing relabeling applied to both sequences
        assert kendall_tau(pred * 10 + 3, true * 10 + 3).tau == \
            kendall_tau(pred, true).tau


def test_tau_self_correlation():
    assert kendall_tau([2, 0, 3, 1], [2, 0, 3, 1]).tau == 1.0


def test_tau_length_mismatch():
    with pytest.raises(MetricError):
        kendall_tau([1, 2], [1, 2, 3])


def test_tau_b_variant():
    # tau-b on tie-free data equals gamma
    assert kendall_tau([0, 1, 2, 3], [0, 1, 2, 3], variant="tau_b").tau == 1.0
    # with ties, tau-b shrinks toward zero relative to gamma
    gamma = kendall_tau([0, 0, 1, 2], [0, 1, 2, 3]).tau
    tau_b = kendall_tau([0, 0, 1, 2], [0, 1, 2, 3], variant="tau_b").tau
    assert abs(tau_b) < abs(gamma)


def test_f1_perfect():
    scores = f1_per_class([0, 1, 2, 3], [0, 1, 2, 3])
    for cls in range(4):
        assert scores[cls].f1 == 1.0


def test_f1_all_zero_predictions_balanced():
    pred = [0] * 8
    true = [0, 0, 1, 1, 2, 2, 3, 3]
    scores = f1_per_class(pred, true)
    assert scores[0].precision == 0.25
    assert scores[0].recall == 1.0
    assert scores[0].f1 == pytest.approx(0.4)
    for cls in (1, 2, 3):
        assert scores[cls].f1 == 0.0


def test_f1_absent_class_flag():
    scores = f1_per_class([0, 1], [0, 1])
    assert scores[3].f1 == 0.0
    assert scores[3].absent


def test_f1_matches_confusion_matrix_oracle():
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(2, 40))
        pred = rng.integers(0, 4, size=n)
        true = rng.integers(0, 4, size=n)
        scores = f1_per_class(pred, true)
        for cls in range(4):
            p, r, f1 = confusion_matrix_f1(pred, true, cls)
            assert scores[cls].precision == pytest.approx(p, abs=1e-12)
            assert scores[cls].recall == pytest.approx(r, abs=1e-12)
            assert scores[cls].f1 == pytest.approx(f1, abs=1e-12)


def test_micro_recall_equals_accuracy_on_balanced_groups():
    rng = np.random.default_rng(4)
    true = np.tile([0, 1, 2, 3], 25)
    pred = rng.integers(0, 4, size=100)
    scores = f1_per_class(pred, true)
    micro_recall = np.mean([scores[c].recall for c in range(4)])
    assert micro_recall == pytest.approx(np.mean(pred == true))


def _tau_fn(p, t):
    return kendall_tau(p, t).tau


def test_bootstrap_constant_metric():
    groups = np.repeat([f"g{i}" for i in range(10)], 4)
    true = np.tile([3, 2, 1, 0], 10)
    summary = bootstrap(_tau_fn, groups, true, true, n_resamples=50, seed=1)
    assert summary.mean == 1.0
    assert summary.se == 0.0


def test_bootstrap_single_resample():
    groups = np.repeat(["a", "b"], 4)
    true = np.tile([3, 2, 1, 0], 2)
    summary = bootstrap(_tau_fn, groups, true, true, n_resamples=1, seed=0)
    assert summary.se == 0.0


def test_bootstrap_deterministic():
    rng = np.random.default_rng(2)
    groups = np.repeat([f"g{i}" for i in range(30)], 4)
    true = np.tile([0, 1, 2, 3], 30)
    pred = rng.integers(0, 4, size=120)
    a = bootstrap(_tau_fn, groups, pred, true, n_resamples=100, seed=7)
    b = bootstrap(_tau_fn, groups, pred, true, n_resamples=100, seed=7)
    assert a == b


def test_bootstrap_binomial_se_matches_analytic():
    # accuracy metric on 400 groups of one row each, p = 0.8 correct:
    # analytic se of the mean is sqrt(p(1-p)/400) ~= 0.02
    p = 0.8
    n_groups = 400
    rng = np.random.default_rng(3)
    groups = np.array([f"g{i}" for i in range(n_groups)])
    true = np.ones(n_groups, dtype=np.int64)
    pred = (rng.uniform(size=n_groups) < p).astype(np.int64)

    def accuracy(pr, tr):
        return float(np.mean(pr == tr))

    summary = bootstrap(accuracy, groups, pred, true, n_resamples=1000, seed=5)
    analytic = np.sqrt(p * (1 - p) / n_groups)
    assert abs(summary.se - analytic) / analytic < 0.2


def test_bootstrap_empty_input():
    with pytest.raises(MetricError):
        bootstrap(_tau_fn, [], [], [], n_resamples=10, seed=0)


def test_bootstrap_train_constant_model(small_dataset):
    from relevbench.corpus import load_instances

    instances = load_instances(small_dataset)
    summaries = bootstrap_train(lambda batch: 0.5, instances,
                                sizes=[8, 16], n_resamples=10, seed=0)
    assert len(summaries) == 2
    for s in summaries:
        assert s.mean == 0.5
        assert s.se == 0.0


def test_bootstrap_train_size_exceeds_data(small_dataset):
    from relevbench.corpus import load_instances

    instances = load_instances(small_dataset)
    with pytest.raises(MetricError):
        bootstrap_train(lambda batch: 0.0, instances, sizes=[10_000],
                        n_resamples=2, seed=0)
