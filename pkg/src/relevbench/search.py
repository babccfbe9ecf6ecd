"""Randomized hyperparameter search with instance-granular k-fold CV.

Samples configurations uniformly from per-parameter grids (or continuous
uniform / integer ranges), scores each by mean Kendall's Tau over the CV
folds, and returns the best configuration plus the full score table.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from relevbench import encoding, models
from relevbench.metrics import kendall_tau
from relevbench.pipeline import Pipeline, PipelineConfig


class SearchError(ValueError):
    pass


# Parameter spaces mirroring the published tuning setup.  Values are either
# lists (uniform choice) or dicts: {"uniform": [lo, hi]} / {"randint": [lo, hi]}.
DEFAULT_KNN_GRID = {
    "n_neighbors": list(range(1, 21)),
    "weights": ["uniform", "distance"],
    "metric": ["euclidean", "manhattan"],
    "pca_n_components": [2, 50, 100, 200, None],
}

DEFAULT_SGD_GRID = {
    "loss": ["hinge", "logistic"],
    "alpha": {"uniform": [0.0001, 0.1]},
    "penalty": ["l2", "l1", "elasticnet"],
    "max_iter": {"randint": [100, 1000]},
    "pca_n_components": [2, 50, 100, 200, None],
}


@dataclass
class SearchSpec:
    model_kind: str
    codec: str = encoding.ONEHOT
    grid: dict = field(default_factory=dict)
    n_iter: int = 30
    folds: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.n_iter < 1:
            raise SearchError("n_iter must be >= 1")
        if self.folds < 2:
            raise SearchError("folds must be >= 2")
        if not self.grid:
            self.grid = (DEFAULT_KNN_GRID if self.model_kind == "knn"
                         else DEFAULT_SGD_GRID)
        for name, space in self.grid.items():
            if isinstance(space, list):
                if not space:
                    raise SearchError(f"empty grid for parameter {name!r}")
            elif not (isinstance(space, dict) and len(space) == 1
                      and next(iter(space)) in ("uniform", "randint")):
                raise SearchError(f"bad space for parameter {name!r}: {space!r}")


@dataclass
class SearchResult:
    best_params: dict
    best_cv_score: float
    table: list[dict]   # one row per iteration: params + per-fold and mean tau


def _sample_params(grid: dict, rng: np.random.Generator) -> dict:
    params = {}
    for name in sorted(grid):
        space = grid[name]
        if isinstance(space, list):
            params[name] = space[int(rng.integers(len(space)))]
        elif "uniform" in space:
            lo, hi = space["uniform"]
            params[name] = float(rng.uniform(lo, hi))
        else:
            lo, hi = space["randint"]
            params[name] = int(rng.integers(lo, hi))
    return params


def _pipeline_config(model_kind: str, codec: str, params: dict) -> PipelineConfig:
    pca = models.PcaConfig(n_components=params.get("pca_n_components"))
    if model_kind == "knn":
        knn = models.KnnConfig(
            n_neighbors=params.get("n_neighbors", 5),
            weights=params.get("weights", "uniform"),
            metric=params.get("metric", "euclidean"),
        )
        return PipelineConfig("knn", codec=codec, knn=knn, pca=pca)
    sgd = models.SgdLinearConfig(
        loss=params.get("loss", "logistic"),
        penalty=params.get("penalty", "l2"),
        alpha=params.get("alpha", 1e-4),
        max_iter=params.get("max_iter", 20),
        seed=params.get("seed", 0),
    )
    return PipelineConfig("sgd_linear", codec=codec, sgd=sgd, pca=pca)


def instance_folds(groups, n_folds: int, seed: int) -> list[np.ndarray]:
    """Partition row indices into folds at instance granularity."""
    groups = np.asarray(groups)
    unique_groups = np.unique(groups)
    if len(unique_groups) < n_folds:
        raise SearchError(
            f"{len(unique_groups)} groups cannot fill {n_folds} folds"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(unique_groups))
    fold_of_group = np.empty(len(unique_groups), dtype=np.int64)
    for fold, start in enumerate(np.array_split(perm, n_folds)):
        fold_of_group[start] = fold
    group_index = {g: i for i, g in enumerate(unique_groups)}
    row_folds = np.array([fold_of_group[group_index[g]] for g in groups])
    return [np.flatnonzero(row_folds == f) for f in range(n_folds)]


def random_search(X, ranks, groups, candidate_indices, spec: SearchSpec) -> SearchResult:
    """Evaluate n_iter sampled configs with k-fold CV scored by Kendall's Tau."""
    X = np.asarray(X, dtype=np.float64)
    ranks = np.asarray(ranks, dtype=np.int64)
    groups = np.asarray(groups)
    candidate_indices = np.asarray(candidate_indices, dtype=np.int64)
    folds = instance_folds(groups, spec.folds, spec.seed)
    for f, rows in enumerate(folds):
        if len(rows) == 0:
            raise SearchError(f"fold {f} is empty")
    rng = np.random.default_rng(spec.seed)
    sampled = [_sample_params(spec.grid, rng) for _ in range(spec.n_iter)]
    table = []
    best_params, best_score = None, -np.inf
    for params in sampled:
        config = _pipeline_config(spec.model_kind, spec.codec, params)
        fold_scores = []
        for held_out in range(spec.folds):
            test_rows = folds[held_out]
            train_rows = np.concatenate(
                [folds[f] for f in range(spec.folds) if f != held_out]
            )
            pipe = Pipeline(config).fit(X[train_rows], ranks[train_rows])
            pred = pipe.predict_ranks(
                X[test_rows], groups[test_rows], candidate_indices[test_rows]
            )
            fold_scores.append(kendall_tau(pred, ranks[test_rows]).tau)
        mean_score = float(np.mean(fold_scores))
        table.append({
            "params": params,
            "fold_scores": [float(s) for s in fold_scores],
            "mean_score": mean_score,
        })
        if mean_score > best_score:
            best_params, best_score = params, mean_score
    return SearchResult(best_params=best_params, best_cv_score=best_score,
                        table=table)
