"""Command-line interface.

Subcommands: ingest, embed, baseline-cosine, tune, train, eval, curve,
report.  Exit code 0 on success; stage-tagged diagnostics and a nonzero
exit otherwise.  All state flows through flags and config files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from relevbench import corpus, encoding, reports
from relevbench.cosine_baseline import similarity_table
from relevbench.embedder import (
    DEFAULT_DIM,
    PAIR_SEPARATOR,
    EmbeddingStore,
    builtin_vectorize,
    candidate_key,
    pair_key,
    prompt_key,
    save_store,
)
from relevbench.metrics import kendall_tau
from relevbench.models import load_model, save_model
from relevbench.pipeline import grouped_thermometer_ranks
from relevbench.runner import (
    ExperimentConfig,
    RunRecord,
    StageError,
    _evaluate,
    _pair_arrays,
    _pipeline_config,
    build_feature_source,
    learning_curve,
    load_pairs,
    run_experiment,
)
from relevbench.search import SearchSpec, random_search
from relevbench.pipeline import Pipeline


def _config_from_args(args) -> ExperimentConfig:
    overrides = {
        "dataset": getattr(args, "dataset", None),
        "embeddings": getattr(args, "embeddings", None),
        "feature_mode": getattr(args, "feature_mode", None),
        "codec": getattr(args, "codec", None),
        "model": getattr(args, "model", None),
        "train_fraction": getattr(args, "train_fraction", None),
        "split_seed": getattr(args, "split_seed", None),
        "train_size": getattr(args, "train_size", None),
        "bootstrap_n": getattr(args, "bootstrap", None),
        "bootstrap_seed": getattr(args, "seed", None),
        "step": getattr(args, "step", None),
        "output_dir": getattr(args, "out", None),
    }
    if getattr(args, "sizes", None):
        overrides["sizes"] = [int(s) for s in args.sizes.split(",")]
    if getattr(args, "config", None):
        return ExperimentConfig.from_file(args.config, overrides)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "dataset" not in overrides:
        raise SystemExit("either --config or --dataset is required")
    return ExperimentConfig(**overrides)


def cmd_ingest(args) -> int:
    with open(args.dataset, "r", encoding="utf-8") as fh:
        instances, diagnostics = corpus.parse_instances(fh)
    for line in diagnostics:
        print(f"rejected: {line}", file=sys.stderr)
    pairs = corpus.expand_pairs(instances)
    print(f"instances: {len(instances)}")
    print(f"pairs: {len(pairs)}")
    if args.pairs_out:
        with open(args.pairs_out, "w", encoding="utf-8", newline="") as fh:
            corpus.write_pairs_csv(pairs, fh)
        print(f"wrote {args.pairs_out}")
    return 1 if (diagnostics and args.strict) else 0


def cmd_embed(args) -> int:
    instances = corpus.load_instances(args.dataset)
    store = EmbeddingStore(dim=args.dim, provenance="builtin-hash")
    for inst in sorted(instances, key=lambda i: i.instance_id):
        store.add(prompt_key(inst.instance_id),
                  builtin_vectorize(inst.prompt, args.dim))
        for idx, cand in enumerate(inst.candidates):
            store.add(candidate_key(inst.instance_id, idx),
                      builtin_vectorize(cand.text, args.dim))
            store.add(pair_key(inst.instance_id, idx),
                      builtin_vectorize(inst.prompt + PAIR_SEPARATOR + cand.text,
                                        args.dim))
    save_store(store, args.out)
    print(f"wrote {len(store)} rows (dim {store.dim}) to {args.out}")
    return 0


def cmd_baseline_cosine(args) -> int:
    config = _config_from_args(args)
    config.model = "cosine"
    record = run_experiment(config)
    out_dir = config.output_dir or "."
    pairs = load_pairs(config.dataset)
    source = build_feature_source(config)
    sims = similarity_table(pairs, source)
    _, _, ranks = _pair_arrays(pairs)
    reports.emit_report([record], out_dir, similarities=sims, ranks=ranks,
                        thresholds=record.thresholds)
    print(f"thresholds: {record.thresholds}")
    print(f"train tau: {record.train_tau:.4f}")
    print(f"test tau: {record.point['kendall_tau']:.4f}")
    return 0


def cmd_tune(args) -> int:
    config = _config_from_args(args)
    pairs = load_pairs(config.dataset)
    train_ids, _ = corpus.split_group_ids(
        [p.group_id for p in pairs],
        corpus.SplitSpec(config.train_fraction, config.split_seed),
    )
    train_pairs = [p for p in pairs if p.group_id in train_ids]
    source = build_feature_source(config)
    X = source.feature_matrix(train_pairs)
    groups, cand, ranks = _pair_arrays(train_pairs)
    grid = json.loads(args.grid) if args.grid else {}
    spec = SearchSpec(model_kind=config.model, codec=config.codec, grid=grid,
                      n_iter=args.iters, folds=args.folds, seed=args.seed)
    result = random_search(X, ranks, groups, cand, spec)
    payload = {
        "best_params": result.best_params,
        "best_cv_score": result.best_cv_score,
        "table": result.table,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    print(json.dumps(result.best_params, sort_keys=True))
    print(f"best cv tau: {result.best_cv_score:.4f}")
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    if config.model == "cosine":
        raise SystemExit("train persists classifier models; use baseline-cosine")
    pairs = load_pairs(config.dataset)
    train_ids, _ = corpus.split_group_ids(
        [p.group_id for p in pairs],
        corpus.SplitSpec(config.train_fraction, config.split_seed),
    )
    train_pairs = [p for p in pairs if p.group_id in train_ids]
    if config.train_size is not None:
        keep = corpus.subsample_group_ids(
            sorted(train_ids), config.train_size, config.subsample_seed)
        train_pairs = [p for p in train_pairs if p.group_id in keep]
    source = build_feature_source(config)
    X = source.feature_matrix(train_pairs)
    _, _, ranks = _pair_arrays(train_pairs)
    pipe = Pipeline(_pipeline_config(config)).fit(X, ranks)
    save_model(pipe.model, args.model_out, feature_mode=config.feature_mode,
               pca=pipe.pca)
    with open(str(args.model_out) + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    print(f"trained on {len(train_pairs)} pairs; wrote {args.model_out}")
    return 0


def cmd_eval(args) -> int:
    with open(str(args.model_in) + ".meta.json", "r", encoding="utf-8") as fh:
        config = ExperimentConfig(**json.load(fh))
    if args.dataset:
        config.dataset = args.dataset
    config.bootstrap_n = args.bootstrap
    config.bootstrap_seed = args.seed
    model, pca = load_model(args.model_in)
    pairs = load_pairs(config.dataset)
    _, test_ids = corpus.split_group_ids(
        [p.group_id for p in pairs],
        corpus.SplitSpec(config.train_fraction, config.split_seed),
    )
    test_pairs = [p for p in pairs if p.group_id in test_ids]
    source = build_feature_source(config)
    X = pca.apply(source.feature_matrix(test_pairs))
    groups, cand, ranks = _pair_arrays(test_pairs)
    if getattr(model, "codec", None) == encoding.THERMOMETER:
        pred = grouped_thermometer_ranks(model.predict_scores(X), groups, cand)
    else:
        pred = model.predict(X)
    point, summaries = _evaluate(pred, ranks, groups, config)
    record = RunRecord(
        config=config.to_dict(),
        engine_version=__import__("relevbench").__version__,
        model=model.kind,
        encoding=getattr(model, "codec", None) or "ranks",
        n_train_pairs=0,
        n_test_pairs=len(test_pairs),
        train_size_requested=config.train_size,
        test_group_hash="",
        point=point,
        bootstrap=summaries,
    )
    out_dir = args.out or config.output_dir or "."
    reports.emit_report([record], out_dir)
    print(f"test tau: {point['kendall_tau']:.4f}")
    return 0


def cmd_run(args) -> int:
    config = _config_from_args(args)
    record = run_experiment(config)
    reports.emit_report([record], config.output_dir or ".")
    print(f"test tau: {record.point['kendall_tau']:.4f}")
    return 0


def cmd_curve(args) -> int:
    config = _config_from_args(args)
    records = learning_curve(config)
    reports.emit_report(records, config.output_dir or ".", curve=True)
    for record in records:
        print(f"size {record.n_train_pairs}: "
              f"tau {record.point['kendall_tau']:.4f}")
    return 0


def cmd_report(args) -> int:
    """Re-render CSV and figures from a persisted report.json."""
    with open(args.records, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    records = []
    for item in data["records"]:
        item.setdefault("timings", {})
        records.append(RunRecord(**item))
    reports.emit_report(records, args.out, curve=len(records) > 1)
    print(f"wrote report files to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relevbench",
        description="Relevance-ranking benchmark engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, dataset_required=False):
        p.add_argument("--config", help="JSON or TOML experiment config")
        p.add_argument("--dataset", required=dataset_required,
                       help="JSONL instances or pair-level CSV")
        p.add_argument("--embeddings", help="EMB1 interchange file")
        p.add_argument("--feature-mode", dest="feature_mode",
                       choices=["joint", "concat"])
        p.add_argument("--train-fraction", dest="train_fraction", type=float)
        p.add_argument("--split-seed", dest="split_seed", type=int)
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("ingest", help="validate a dataset and report counts")
    p.add_argument("dataset")
    p.add_argument("--pairs-out", dest="pairs_out",
                   help="write expanded pair-level CSV")
    p.add_argument("--strict", action="store_true",
                   help="nonzero exit if any record was rejected")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("embed",
                       help="builtin vectorizer -> interchange embedding file")
    p.add_argument("dataset")
    p.add_argument("out")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("baseline-cosine",
                       help="threshold grid search + evaluation")
    add_common(p)
    p.add_argument("--step", type=float, default=0.025)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_baseline_cosine)

    p = sub.add_parser("tune", help="randomized hyperparameter search")
    add_common(p)
    p.add_argument("--model", choices=["knn", "sgd_linear"], default="sgd_linear")
    p.add_argument("--codec", choices=list(encoding.SCHEMES), default="onehot")
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", help="JSON parameter grid override")
    p.set_defaults(fn=cmd_tune)

    p = sub.add_parser("train", help="fit a model and persist it")
    add_common(p)
    p.add_argument("--model", choices=["knn", "sgd_linear"])
    p.add_argument("--codec", choices=list(encoding.SCHEMES))
    p.add_argument("--train-size", dest="train_size", type=int)
    p.add_argument("--model-out", dest="model_out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a persisted model on the test split")
    p.add_argument("--model-in", dest="model_in", required=True)
    p.add_argument("--dataset")
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("run", help="end-to-end experiment from a config")
    add_common(p)
    p.add_argument("--model", choices=["knn", "sgd_linear", "cosine"])
    p.add_argument("--codec", choices=list(encoding.SCHEMES))
    p.add_argument("--train-size", dest="train_size", type=int)
    p.add_argument("--bootstrap", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("curve", help="learning-curve sweep over training sizes")
    add_common(p)
    p.add_argument("--model", choices=["knn", "sgd_linear", "cosine"])
    p.add_argument("--codec", choices=list(encoding.SCHEMES))
    p.add_argument("--sizes", help="comma-separated training pair counts")
    p.add_argument("--bootstrap", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("report", help="re-render report files from report.json")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
