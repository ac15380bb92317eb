"""Contextual expansion, contextual weighting and the preprocessing pipeline.

Stages always run in the order normalize -> expand -> weight.  Weights are
estimated from the normalized training primaries and applied to the
original primary columns only; expanded context columns keep weight 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ctxlearn.core import Dataset, FeatureRole, FeatureSchema
from ctxlearn.normalize import (
    SIGMA_FLOOR,
    ContextEstimator,
    fit_context_estimator,
    transform_contextual,
)

STAGE_ORDER = ("normalize", "expand", "weight")


class StrategyError(ValueError):
    pass


def expand(dataset: Dataset, contextual_columns) -> Dataset:
    """Move the named contextual columns into the primary block.

    Primary columns come first in their original order, followed by the
    selected columns (now labelled primary), then everything else.
    """
    cols = list(contextual_columns)
    if not cols:
        return dataset
    schema = dataset.schema
    sel = []
    for name in cols:
        i = schema.index(name)
        if schema.roles[i] is not FeatureRole.CONTEXTUAL:
            raise StrategyError(f"column {name!r} is {schema.roles[i].value}, not contextual")
        sel.append(i)
    prim = schema.indices(FeatureRole.PRIMARY)
    rest = [i for i in range(schema.n_features) if i not in prim and i not in sel]
    order = prim + sel + rest
    roles = [schema.roles[i] for i in order]
    for pos in range(len(prim), len(prim) + len(sel)):
        roles[pos] = FeatureRole.PRIMARY
    new = FeatureSchema(
        tuple(schema.feature_names[i] for i in order),
        tuple(roles),
        schema.class_values,
        tuple(schema.discrete[i] for i in order),
    )
    return dataset.with_features(new, dataset.X[:, order])


@dataclass(frozen=True)
class WeightVector:
    feature_names: tuple[str, ...]
    weights: np.ndarray
    inter: np.ndarray
    intra: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.feature_names),):
            raise StrategyError("one weight per feature name required")
        if not (np.all(np.isfinite(w)) and np.all(w > 0)):
            raise StrategyError("weights must be positive and finite")


def _cell_keys(dataset: Dataset):
    groups = dataset.groups if dataset.has_groups else np.zeros(len(dataset), dtype=object)
    return groups, dataset.labels


def compute_weights(train: Dataset) -> WeightVector:
    """Inter-class over intra-class deviation, per primary feature.

    inter_j: mean over groups of the stddev of feature j across all of the
    group's rows.  intra_j: mean over (group, class) cells of the stddev of
    feature j within the cell.  Without group tags the whole set is one
    group.
    """
    names = tuple(train.schema.names(FeatureRole.PRIMARY))
    X = train.columns(FeatureRole.PRIMARY)
    groups, labels = _cell_keys(train)

    group_ids = list(dict.fromkeys(groups.tolist()))
    cells = list(dict.fromkeys(zip(groups.tolist(), labels.tolist())))
    small = [f"group {g!r}" for g in group_ids if np.sum(groups == g) < 2]
    cell_rows = {}
    for g, c in cells:
        rows = X[(groups == g) & (labels == c)]
        if len(rows) < 2:
            small.append(f"cell (group {g!r}, class {c!r}) has {len(rows)} row")
        cell_rows[(g, c)] = rows
    if small:
        raise StrategyError("weighting needs at least 2 rows per group and per cell: " + "; ".join(small))

    inter = np.mean([X[groups == g].std(axis=0, ddof=1) for g in group_ids], axis=0)
    intra = np.mean([rows.std(axis=0, ddof=1) for rows in cell_rows.values()], axis=0)
    w = np.maximum(inter, SIGMA_FLOOR) / np.maximum(intra, SIGMA_FLOOR)
    return WeightVector(names, w, inter, intra)


def apply_weights(w: WeightVector, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(w.weights):
        raise ValueError(f"{len(w.weights)} weights for {x.shape[-1]} features")
    return x * w.weights


def weight_dataset(w: WeightVector, dataset: Dataset) -> Dataset:
    """Scale the weighted columns by name; any other column is untouched."""
    X = np.array(dataset.X)
    idx = [dataset.schema.index(n) for n in w.feature_names]
    X[:, idx] = apply_weights(w, X[:, idx])
    return dataset.with_features(dataset.schema, X)


@dataclass(frozen=True)
class PipelineConfig:
    use_normalization: bool = False
    estimator: str = "group-stats"
    use_expansion: bool = False
    expand_columns: tuple[str, ...] = ("sex",)
    use_weighting: bool = False
    estimator_k: int = 5

    def describe(self) -> str:
        return "/".join(
            "Yes" if f else "No" for f in (self.use_normalization, self.use_expansion, self.use_weighting)
        )

    def tokens(self) -> list[str]:
        out = []
        if self.use_normalization:
            out.append("norm")
        if self.use_expansion:
            out.append("expand")
        if self.use_weighting:
            out.append("weight")
        return out


@dataclass(frozen=True)
class Pipeline:
    config: PipelineConfig
    estimator: ContextEstimator | None = None
    weights: WeightVector | None = None
    stages: tuple[str, ...] = field(default_factory=tuple)


def _normalize(config: PipelineConfig, estimator, dataset: Dataset, side: str) -> Dataset:
    if config.estimator == "group-stats" and side == "test":
        # unseen speakers: statistics from the rows' own (unlabelled) features
        estimator = fit_context_estimator(dataset, "group-stats")
    return transform_contextual(estimator, dataset)


def build_pipeline(train: Dataset, config: PipelineConfig) -> Pipeline:
    estimator = weights = None
    data = train
    if config.use_normalization:
        estimator = fit_context_estimator(train, config.estimator, k=config.estimator_k)
        data = transform_contextual(estimator, train)
    if config.use_weighting:
        weights = compute_weights(data)
    stages = tuple(
        s
        for s, on in zip(STAGE_ORDER, (config.use_normalization, config.use_expansion, config.use_weighting))
        if on
    )
    return Pipeline(config, estimator, weights, stages)


def run_pipeline(pipeline: Pipeline, dataset: Dataset, side: str = "train") -> Dataset:
    if side not in ("train", "test"):
        raise ValueError(f"side must be 'train' or 'test', not {side!r}")
    cfg = pipeline.config
    out = dataset
    if cfg.use_normalization:
        out = _normalize(cfg, pipeline.estimator, out, side)
    if cfg.use_expansion:
        out = expand(out, cfg.expand_columns)
    if cfg.use_weighting:
        out = weight_dataset(pipeline.weights, out)
    return out
