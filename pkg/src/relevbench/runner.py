"""Experiment orchestration: configuration, end-to-end runs, learning curves.

Every run is a pure function of (dataset bytes, config, seeds); stage errors
propagate with the stage name attached.  Wall-clock timings are collected but
kept out of the serialized reports so outputs stay byte-identical across
re-runs.
"""

from __future__ import annotations

import hashlib
import json
import time
from contextlib import contextmanager

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from dataclasses import dataclass, field, asdict

import numpy as np

from relevbench import __version__, corpus, encoding
from relevbench.cosine_baseline import (
    ThresholdTriple,
    classify_by_thresholds,
    grid_search_thresholds,
    similarity_table,
)
from relevbench.embedder import FeatureSource, load_store
from relevbench.metrics import bootstrap, f1_per_class, kendall_tau
from relevbench.models import KnnConfig, PcaConfig, SgdLinearConfig
from relevbench.pipeline import Pipeline, PipelineConfig
from relevbench.search import SearchSpec, random_search

RANK_NAMES = {3: "most", 2: "second_most", 1: "second_least", 0: "least"}


class StageError(RuntimeError):
    """Raised when a pipeline stage fails; message carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass
class ExperimentConfig:
    dataset: str
    embeddings: str | None = None
    feature_mode: str = "joint"            # joint | concat
    codec: str = encoding.ONEHOT           # onehot | thermometer
    model: str = "sgd_linear"              # knn | sgd_linear | cosine
    knn: dict = field(default_factory=dict)
    sgd: dict = field(default_factory=dict)
    pca_n_components: int | None = None
    train_fraction: float = 0.8
    split_seed: int = 0
    train_size: int | None = None          # requested train pairs; None = all
    subsample_seed: int = 0
    sizes: list[int] = field(default_factory=list)
    bootstrap_n: int = 1000
    bootstrap_seed: int = 0
    step: float = 0.025                    # cosine threshold grid step
    search: dict | None = None             # n_iter / folds / seed / grid
    tau_variant: str = "gamma"
    output_dir: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        """Load a JSON or TOML config file; overrides win over file keys."""
        text = open(path, "rb").read()
        if str(path).endswith(".toml"):
            data = tomllib.loads(text.decode("utf-8"))
        else:
            data = json.loads(text.decode("utf-8"))
        if overrides:
            data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


@dataclass
class RunRecord:
    config: dict
    engine_version: str
    model: str
    encoding: str
    n_train_pairs: int
    n_test_pairs: int
    train_size_requested: int | None
    test_group_hash: str
    point: dict                     # metric name -> value on the full test set
    bootstrap: list[dict]           # serialized BootstrapSummary per metric
    thresholds: list[float] | None = None
    train_tau: float | None = None
    search: dict | None = None
    timings: dict = field(default_factory=dict)   # informational, not serialized

    def to_dict(self) -> dict:
        data = asdict(self)
        # keep report output byte-identical across runs: timings vary by
        # wall clock and output_dir is not part of the experiment identity
        data.pop("timings")
        data["config"] = dict(data["config"], output_dir=None)
        return data


def load_pairs(path) -> list[corpus.PairRecord]:
    """Load a dataset as pair records; JSONL instances or pre-expanded CSV."""
    if str(path).endswith(".csv"):
        with open(path, "r", encoding="utf-8", newline="") as fh:
            return corpus.parse_pairs_csv(fh)
    return corpus.expand_pairs(corpus.load_instances(path))


def _pair_arrays(pairs):
    groups = np.array([p.group_id for p in pairs])
    cand = np.array([p.candidate_index for p in pairs], dtype=np.int64)
    ranks = np.array([p.rank for p in pairs], dtype=np.int64)
    return groups, cand, ranks


def _group_hash(group_ids) -> str:
    payload = "\n".join(sorted(set(group_ids))).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def build_feature_source(config: ExperimentConfig) -> FeatureSource:
    store = load_store(config.embeddings) if config.embeddings else None
    return FeatureSource(mode=config.feature_mode, store=store)


def _pipeline_config(config: ExperimentConfig) -> PipelineConfig:
    pca = PcaConfig(n_components=config.pca_n_components)
    if config.model == "knn":
        return PipelineConfig("knn", codec=config.codec,
                              knn=KnnConfig(**config.knn), pca=pca)
    return PipelineConfig("sgd_linear", codec=config.codec,
                          sgd=SgdLinearConfig(**config.sgd), pca=pca)


def _evaluate(pred, true, groups, config: ExperimentConfig):
    """Point metrics plus bootstrap summaries for tau and per-class F1."""
    point = {}
    tau = kendall_tau(pred, true, variant=config.tau_variant)
    point["kendall_tau"] = tau.tau
    for rank, scores in f1_per_class(pred, true).items():
        point[f"f1_{RANK_NAMES[rank]}"] = scores.f1
    summaries = []

    def tau_fn(p, t):
        return kendall_tau(p, t, variant=config.tau_variant).tau

    summaries.append(
        bootstrap(tau_fn, groups, pred, true, n_resamples=config.bootstrap_n,
                  seed=config.bootstrap_seed, metric_name="kendall_tau")
    )
    for rank in (3, 2, 1, 0):
        def f1_fn(p, t, rank=rank):
            return f1_per_class(p, t)[rank].f1

        summaries.append(
            bootstrap(f1_fn, groups, pred, true, n_resamples=config.bootstrap_n,
                      seed=config.bootstrap_seed,
                      metric_name=f"f1_{RANK_NAMES[rank]}")
        )
    return point, [asdict(s) for s in summaries]


def run_experiment(config: ExperimentConfig) -> RunRecord:
    timings = {}
    started = time.perf_counter()

    with _stage("ingest"):
        pairs = load_pairs(config.dataset)
        if not pairs:
            raise ValueError("dataset is empty")
    timings["ingest"] = time.perf_counter() - started

    with _stage("split"):
        all_ids = [p.group_id for p in pairs]
        train_ids, test_ids = corpus.split_group_ids(
            all_ids, corpus.SplitSpec(config.train_fraction, config.split_seed)
        )
        if config.train_size is not None:
            train_ids = corpus.subsample_group_ids(
                sorted(train_ids), config.train_size, config.subsample_seed
            )
        train_pairs = [p for p in pairs if p.group_id in train_ids]
        test_pairs = [p for p in pairs if p.group_id in test_ids]

    with _stage("features"):
        t0 = time.perf_counter()
        source = build_feature_source(config)
        timings["features_setup"] = time.perf_counter() - t0

    search_result = None
    thresholds = None
    train_tau = None

    if config.model == "cosine":
        with _stage("baseline"):
            t0 = time.perf_counter()
            train_sims = similarity_table(train_pairs, source)
            test_sims = similarity_table(test_pairs, source)
            _, _, train_ranks = _pair_arrays(train_pairs)
            triple, train_tau = grid_search_thresholds(
                train_sims, train_ranks, step=config.step
            )
            thresholds = list(triple.as_tuple())
            pred = classify_by_thresholds(test_sims, triple)
            timings["baseline"] = time.perf_counter() - t0
        model_desc = "cosine"
    else:
        with _stage("features"):
            t0 = time.perf_counter()
            X_train = source.feature_matrix(train_pairs)
            X_test = source.feature_matrix(test_pairs)
            tr_groups, tr_cand, tr_ranks = _pair_arrays(train_pairs)
            timings["features"] = time.perf_counter() - t0
        if config.search is not None:
            with _stage("search"):
                t0 = time.perf_counter()
                spec = SearchSpec(model_kind=config.model, codec=config.codec,
                                  **config.search)
                result = random_search(X_train, tr_ranks, tr_groups, tr_cand, spec)
                search_result = {
                    "best_params": result.best_params,
                    "best_cv_score": result.best_cv_score,
                    "table": result.table,
                }
                config = _apply_best_params(config, result.best_params)
                timings["search"] = time.perf_counter() - t0
        with _stage("fit"):
            t0 = time.perf_counter()
            pipe = Pipeline(_pipeline_config(config)).fit(X_train, tr_ranks)
            timings["fit"] = time.perf_counter() - t0
        with _stage("predict"):
            t0 = time.perf_counter()
            te_groups, te_cand, _ = _pair_arrays(test_pairs)
            pred = pipe.predict_ranks(X_test, te_groups, te_cand)
            timings["predict"] = time.perf_counter() - t0
        model_desc = config.model

    with _stage("metrics"):
        t0 = time.perf_counter()
        te_groups, _, te_ranks = _pair_arrays(test_pairs)
        point, summaries = _evaluate(pred, te_ranks, te_groups, config)
        timings["metrics"] = time.perf_counter() - t0

    timings["total"] = time.perf_counter() - started
    return RunRecord(
        config=config.to_dict(),
        engine_version=__version__,
        model=model_desc,
        encoding=config.codec if config.model != "cosine" else "thresholds",
        n_train_pairs=len(train_pairs),
        n_test_pairs=len(test_pairs),
        train_size_requested=config.train_size,
        test_group_hash=_group_hash(test_ids),
        point=point,
        bootstrap=summaries,
        thresholds=thresholds,
        train_tau=train_tau,
        search=search_result,
        timings=timings,
    )


def _apply_best_params(config: ExperimentConfig, params: dict) -> ExperimentConfig:
    data = config.to_dict()
    data["search"] = None
    data["pca_n_components"] = params.get("pca_n_components",
                                          data["pca_n_components"])
    model_params = {k: v for k, v in params.items() if k != "pca_n_components"}
    if config.model == "knn":
        data["knn"] = {**data["knn"], **model_params}
    else:
        data["sgd"] = {**data["sgd"], **model_params}
    return ExperimentConfig(**data)


def learning_curve(config: ExperimentConfig) -> list[RunRecord]:
    """One run per training size against the fixed test split.

    Per-size subsample seeds are derived from (subsample_seed, size index) so
    sizes are independent of each other and of execution order.
    """
    if not config.sizes:
        raise StageError("curve", ValueError("config.sizes is empty"))
    if sorted(config.sizes) != list(config.sizes):
        raise StageError("curve", ValueError("sizes must be sorted ascending"))
    records = []
    for i, size in enumerate(config.sizes):
        derived = int(np.random.SeedSequence(
            [config.subsample_seed, i]).generate_state(1)[0])
        data = config.to_dict()
        data.update(train_size=size, subsample_seed=derived, sizes=[])
        records.append(run_experiment(ExperimentConfig(**data)))
    hashes = {r.test_group_hash for r in records}
    if len(hashes) != 1:
        raise StageError("curve", AssertionError("test set changed across sizes"))
    return records
