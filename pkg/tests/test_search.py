import numpy as np
import pytest

from relevbench.search import (
    DEFAULT_KNN_GRID,
    DEFAULT_SGD_GRID,
    SearchError,
    SearchSpec,
    instance_folds,
    random_search,
)

from test_models import ordinal_data


def ordinal_search_data(n_groups=24, seed=0):
    X, ranks = ordinal_data(n_groups, seed=seed)
    groups = np.repeat([f"g{i}" for i in range(n_groups)], 4)
    cand = np.tile(np.arange(4), n_groups)
    return X, ranks, groups, cand


def test_instance_folds_partition():
    groups = np.repeat([f"g{i}" for i in range(9)], 4)
    folds = instance_folds(groups, 3, seed=0)
    all_rows = np.sort(np.concatenate(folds))
    assert np.array_equal(all_rows, np.arange(36))
    for fold in folds:
        fold_groups = set(groups[fold])
        for other in folds:
            if other is not fold:
                assert fold_groups.isdisjoint(set(groups[other]))
    # instance-granular: each group's 4 rows share a fold
    for fold in folds:
        for g in set(groups[fold]):
            assert np.sum(groups[fold] == g) == 4


def test_single_iteration_returns_that_config():
    X, ranks, groups, cand = ordinal_search_data()
    grid = {"n_neighbors": [3], "weights": ["uniform"],
            "metric": ["euclidean"], "pca_n_components": [None]}
    spec = SearchSpec("knn", grid=grid, n_iter=1, folds=3, seed=0)
    result = random_search(X, ranks, groups, cand, spec)
    assert result.best_params == {"metric": "euclidean", "n_neighbors": 3,
                                  "pca_n_components": None, "weights": "uniform"}
    assert len(result.table) == 1


def test_search_selects_planted_optimum():
    # k=1 memorizes locally-clustered ordinal data; k = train size is a
    # constant predictor, so the search must prefer the small k when sampled
    X, ranks, groups, cand = ordinal_search_data(n_groups=24)
    grid = {"n_neighbors": [1, 60], "weights": ["uniform"],
            "metric": ["euclidean"], "pca_n_components": [None]}
    spec = SearchSpec("knn", grid=grid, n_iter=8, folds=3, seed=1)
    result = random_search(X, ranks, groups, cand, spec)
    assert result.best_params["n_neighbors"] == 1
    assert result.best_cv_score > 0.9


def test_paper_grids_expressible():
    assert DEFAULT_KNN_GRID["n_neighbors"] == list(range(1, 21))
    assert DEFAULT_KNN_GRID["pca_n_components"] == [2, 50, 100, 200, None]
    assert DEFAULT_SGD_GRID["alpha"] == {"uniform": [0.0001, 0.1]}
    assert DEFAULT_SGD_GRID["max_iter"] == {"randint": [100, 1000]}


def test_search_deterministic():
    X, ranks, groups, cand = ordinal_search_data()
    grid = {"n_neighbors": [1, 3, 5], "weights": ["uniform", "distance"],
            "metric": ["euclidean"], "pca_n_components": [None]}
    spec = SearchSpec("knn", grid=grid, n_iter=5, folds=2, seed=9)
    a = random_search(X, ranks, groups, cand, spec)
    b = random_search(X, ranks, groups, cand, spec)
    assert a.table == b.table
    assert a.best_params == b.best_params


def test_sgd_search_smoke():
    X, ranks, groups, cand = ordinal_search_data(n_groups=18)
    grid = {"loss": ["logistic"], "alpha": {"uniform": [1e-4, 1e-2]},
            "penalty": ["l2"], "max_iter": {"randint": [5, 15]},
            "pca_n_components": [None]}
    spec = SearchSpec("sgd_linear", codec="thermometer", grid=grid,
                      n_iter=3, folds=3, seed=2)
    result = random_search(X, ranks, groups, cand, spec)
    assert 1e-4 <= result.best_params["alpha"] <= 1e-2
    assert 5 <= result.best_params["max_iter"] < 15
    assert result.best_cv_score > 0.5


def test_empty_grid_rejected():
    with pytest.raises(SearchError):
        SearchSpec("knn", grid={"n_neighbors": []})


def test_too_few_groups_for_folds():
    X, ranks, groups, cand = ordinal_search_data(n_groups=2)
    spec = SearchSpec("knn", grid={"n_neighbors": [1]}, n_iter=1, folds=3)
    with pytest.raises(SearchError):
        random_search(X, ranks, groups, cand, spec)
