"""Experiment drivers behind the CLI: the vowel strategy grid and the
cold/warm normalization comparison on synthetic data.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

import numpy as np

from ctxlearn.classify import EvalResult, evaluate, mlr_fit, nn_fit, selection_fit
from ctxlearn.core import Dataset, split_by
from ctxlearn.data import ShiftScenario, fingerprint, generate_shift
from ctxlearn.normalize import (
    fit_context_estimator,
    fit_plain,
    transform_contextual,
    transform_plain,
)
from ctxlearn.report import ExperimentReport, ReportRow
from ctxlearn.strategies import STAGE_ORDER, PipelineConfig, build_pipeline, run_pipeline

STRATEGY_TOKENS = ("norm", "expand", "weight", "select")

# row order: normalization is the slowest-varying flag, weighting the fastest
ALL_COMBOS = tuple(
    PipelineConfig(use_normalization=n, use_expansion=e, use_weighting=w)
    for n, e, w in itertools.product((False, True), repeat=3)
)

SYNTHETIC_NORMALIZATIONS = (
    "none",
    "minmax",
    "avgdev",
    "percentile",
    "baseline-avgdev",
    "contextual-knn",
    "contextual-linear",
)


class ExperimentError(ValueError):
    pass


def parse_strategies(spec: str) -> tuple[list[PipelineConfig], bool]:
    """Turn a strategy string into pipeline configs and a selection flag.

    ``"all-combos"`` gives the eight on/off combinations of norm, expand and
    weight.  Otherwise ``spec`` is a comma-separated subset of
    ``norm,expand,weight,select`` (empty means no strategy).
    """
    spec = spec.strip()
    if spec == "all-combos":
        return list(ALL_COMBOS), False
    tokens = [t.strip() for t in spec.split(",") if t.strip()]
    unknown = [t for t in tokens if t not in STRATEGY_TOKENS]
    if unknown:
        raise ExperimentError(f"unknown strategy token(s): {', '.join(unknown)}")
    cfg = PipelineConfig(
        use_normalization="norm" in tokens, use_expansion="expand" in tokens, use_weighting="weight" in tokens
    )
    return [cfg], "select" in tokens


def _fit(classifier: str, train: Dataset, k: int):
    if classifier == "nn":
        return nn_fit(train, k=k)
    if classifier == "mlr":
        return mlr_fit(train)
    raise ExperimentError(f"unknown classifier {classifier!r}")


def run_vowel_config(
    train: Dataset, test: Dataset, config: PipelineConfig, classifier: str = "nn", k: int = 1, select: bool = False
) -> EvalResult:
    pipe = build_pipeline(train, config)
    tr = run_pipeline(pipe, train, side="train")
    te = run_pipeline(pipe, test, side="test")
    if select:
        options = {"k": k} if classifier == "nn" else {}
        model = selection_fit(tr, "sex", base=classifier, **options)
    else:
        model = _fit(classifier, tr, k)
    return evaluate(model, te)


def run_vowel(
    dataset: Dataset,
    strategies: str = "all-combos",
    classifier: str = "nn",
    k: int = 1,
    estimator: str = "group",
) -> ExperimentReport:
    if estimator not in ("group", "group-stats"):
        raise ExperimentError("the vowel context is the speaker identity; only the group estimator applies")
    configs, select = parse_strategies(strategies)
    train, test = split_by(dataset, lambda o: o.split == "train")
    rows = []
    for cfg in configs:
        res = run_vowel_config(train, test, cfg, classifier, k, select)
        n, e, w = cfg.describe().split("/")
        cols = {"normalization": n, "expansion": e, "weighting": w}
        if select:
            cols["selection"] = "Yes"
        rows.append(ReportRow(cfg.describe() + ("/select" if select else ""), res.correct, res.total, cols))
    meta = {
        "experiment": "vowel",
        "classifier": classifier,
        "k": k,
        "strategies": strategies,
        "stage_order": list(STAGE_ORDER),
        "estimator": "group-stats (per speaker; test speakers from their own rows)",
        "expand_columns": ["sex"],
        "selection_column": "sex" if select else None,
        "dataset_fingerprint": fingerprint(dataset),
        "train_rows": len(train),
        "test_rows": len(test),
    }
    return ExperimentReport("vowel: contextual strategies", tuple(rows), meta)


def _normalize_fold(method: str, train: Dataset, test: Dataset, full: Dataset, estimator_k: int):
    """Fit ``method`` for one fold; return transformed (train, test)."""
    if method.startswith("contextual-"):
        kind = {"contextual-knn": "knn-regress", "contextual-linear": "linear-regress"}[method]
        # baseline rows from both weather ranges, as a healthy reference set
        est = fit_context_estimator(full, kind, k=estimator_k)
        return transform_contextual(est, train), transform_contextual(est, test)
    if method == "baseline-avgdev":
        model = fit_plain(full, method)
    else:
        model = fit_plain(train, method)
    return transform_plain(model, train), transform_plain(model, test)


def synthetic_fold_results(
    dataset: Dataset, method: str, classifier: str, k: int = 1, estimator_k: int = 5
) -> EvalResult:
    """Two-fold cold/warm protocol: train on one range, test on the other,
    swap, and sum.  Baseline rows are never scored.
    """
    total = None
    for train_split, test_split in (("cold", "warm"), ("warm", "cold")):
        train, _ = split_by(dataset, lambda o: o.split == train_split)
        test, _ = split_by(dataset, lambda o: o.split == test_split and not o.baseline)
        tr, te = _normalize_fold(method, train, test, dataset, estimator_k)
        res = evaluate(_fit(classifier, tr, k), te)
        total = res if total is None else total + res
    return total


def run_synthetic(
    scenario: ShiftScenario | None = None,
    classifiers=("nn", "mlr"),
    k: int = 1,
    estimator_k: int = 5,
    dataset: Dataset | None = None,
) -> ExperimentReport:
    scenario = scenario or ShiftScenario()
    dataset = dataset if dataset is not None else generate_shift(scenario)
    rows = []
    for clf in classifiers:
        for method in SYNTHETIC_NORMALIZATIONS:
            res = synthetic_fold_results(dataset, method, clf, k, estimator_k)
            rows.append(ReportRow(f"{clf}/{method}", res.correct, res.total, {"classifier": clf, "normalization": method}))
    meta = {
        "experiment": "synthetic",
        "seed": scenario.seed,
        "scenario": {
            "n_classes": scenario.n_classes,
            "n_features": scenario.n_features,
            "context_dim": scenario.context_dim,
            "n_rows": scenario.n_rows,
            "class_scale": scenario.class_scale,
            "coupling_scale": scenario.coupling_scale,
            "noise_scale": scenario.noise_scale,
            "healthy_fraction": scenario.healthy_fraction,
            "baseline_fraction": scenario.baseline_fraction,
            "cold_range": list(scenario.cold_range),
            "warm_range": list(scenario.warm_range),
        },
        "protocol": "train cold/test warm + train warm/test cold, summed; baseline rows not scored",
        "k": k,
        "estimator_k": estimator_k,
        "dataset_fingerprint": fingerprint(dataset),
    }
    return ExperimentReport("synthetic: normalization under context shift", tuple(rows), meta)


def mean_accuracy_over_seeds(seeds, method: str, classifier: str = "nn", **scenario_options) -> float:
    accs = []
    for seed in seeds:
        ds = generate_shift(replace(ShiftScenario(**scenario_options), seed=seed))
        accs.append(synthetic_fold_results(ds, method, classifier).accuracy)
    return float(np.mean(accs))
