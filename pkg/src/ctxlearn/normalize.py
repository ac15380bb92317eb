"""Context-free and contextual normalization of primary features.

Plain methods (fitted on a training set, or on its healthy baseline rows):

=================  ==========================================
``none``           identity
``minmax``         (x - min) / (max - min), not clamped
``avgdev``         (x - mean) / stddev
``percentile``     mid-rank position among the training values
``baseline-avgdev``  avgdev over baseline-flagged rows only
=================  ==========================================

Contextual normalization computes ``v = (x - mu(c)) / sigma(c)`` where a
:class:`ContextEstimator` supplies the context-conditional mean and spread.
All standard deviations use the n-1 convention and are floored at
``SIGMA_FLOOR``.  Only primary columns are touched; everything else passes
through.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from ctxlearn.core import Dataset, FeatureRole
from ctxlearn.lstsq import solve_least_squares

SIGMA_FLOOR = 1e-6

PLAIN_METHODS = ("minmax", "avgdev", "percentile", "baseline-avgdev")
ESTIMATOR_KINDS = ("group-stats", "knn-regress", "linear-regress")


class NormalizationError(ValueError):
    """Fitting failed; ``problems`` lists one message per offending feature."""

    def __init__(self, message: str, problems: list[str] | None = None):
        self.problems = list(problems or [])
        if self.problems:
            message = message + ": " + "; ".join(self.problems)
        super().__init__(message)


class UnknownGroupError(KeyError):
    pass


def mean_std(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and n-1 standard deviations (raw, not floored)."""
    block = np.asarray(block, dtype=float)
    return block.mean(axis=0), block.std(axis=0, ddof=1)


def _floor(sigma):
    return np.maximum(sigma, SIGMA_FLOOR)


# --------------------------------------------------------------------------
# plain normalization


@dataclass(frozen=True)
class NormalizationModel:
    method: str
    feature_names: tuple[str, ...]
    params: dict[str, np.ndarray] = field(default_factory=dict)
    reference: tuple[np.ndarray, ...] = ()  # sorted training values, percentile only
    estimator: "ContextEstimator | None" = None

    def to_record(self) -> dict:
        rec = {
            "method": self.method,
            "feature_names": list(self.feature_names),
            "params": {k: v.tolist() for k, v in self.params.items()},
            "reference": [r.tolist() for r in self.reference],
        }
        if self.estimator is not None:
            rec["estimator"] = self.estimator.to_record()
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "NormalizationModel":
        est = rec.get("estimator")
        return cls(
            rec["method"],
            tuple(rec["feature_names"]),
            {k: np.asarray(v, dtype=float) for k, v in rec["params"].items()},
            tuple(np.asarray(r, dtype=float) for r in rec["reference"]),
            estimator_from_record(est) if est is not None else None,
        )


def fit_plain(train: Dataset, method: str, baseline_only: bool = False) -> NormalizationModel:
    if method not in PLAIN_METHODS and method != "none":
        raise ValueError(f"unknown plain normalization {method!r}")
    names = tuple(train.schema.names(FeatureRole.PRIMARY))
    X = train.columns(FeatureRole.PRIMARY)
    if method == "baseline-avgdev" or baseline_only:
        X = X[train.baseline]
        if len(X) < 2:
            raise NormalizationError(f"{method} needs at least 2 baseline rows, got {len(X)}")
    if method == "none":
        return NormalizationModel("none", names)
    if len(X) < 1 or (method not in ("minmax", "percentile") and len(X) < 2):
        raise NormalizationError(f"{method} needs more training rows, got {len(X)}")

    if method == "minmax":
        lo, hi = X.min(axis=0), X.max(axis=0)
        bad = [f"{n}: constant value {a}" for n, a, b in zip(names, lo, hi) if b <= a]
        if bad:
            raise NormalizationError("minmax on constant features", bad)
        return NormalizationModel(method, names, {"min": lo, "max": hi})
    if method == "percentile":
        return NormalizationModel(method, names, reference=tuple(np.sort(X[:, j]) for j in range(X.shape[1])))

    mean, std = mean_std(X)
    bad = [f"{n}: stddev {s:.3g}" for n, s in zip(names, std) if not s >= SIGMA_FLOOR]
    if bad:
        raise NormalizationError(f"{method} on near-constant features", bad)
    return NormalizationModel(method, names, {"mean": mean, "std": std})


def _midrank(sorted_ref: np.ndarray, x: np.ndarray) -> np.ndarray:
    below = np.searchsorted(sorted_ref, x, side="left")
    upto = np.searchsorted(sorted_ref, x, side="right")
    return np.clip((below + 0.5 * (upto - below)) / len(sorted_ref), 0.0, 1.0)


def apply_plain(model: NormalizationModel, x) -> np.ndarray:
    """Normalize one feature vector, or each row of a 2-D array."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(model.feature_names):
        raise ValueError(f"expected {len(model.feature_names)} features, got {x.shape[-1]}")
    m = model.method
    if m == "none":
        return x.copy()
    if m == "minmax":
        lo, hi = model.params["min"], model.params["max"]
        return (x - lo) / (hi - lo)
    if m in ("avgdev", "baseline-avgdev"):
        return (x - model.params["mean"]) / model.params["std"]
    if m == "percentile":
        out = np.empty_like(x)
        for j, ref in enumerate(model.reference):
            out[..., j] = _midrank(ref, x[..., j])
        return out
    if m == "contextual":
        raise ValueError("contextual models need a context; use contextual_normalize")
    raise ValueError(f"unknown method {m!r}")


# --------------------------------------------------------------------------
# context estimators


@dataclass(frozen=True)
class GroupStatsEstimator:
    """Per-group mean and stddev of every primary feature."""

    feature_names: tuple[str, ...]
    stats: dict[Hashable, tuple[np.ndarray, np.ndarray]]
    fallback: tuple[np.ndarray, np.ndarray] | None = None
    kind: str = "group-stats"

    def query(self, group) -> tuple[np.ndarray, np.ndarray]:
        if group in self.stats:
            return self.stats[group]
        if self.fallback is not None:
            return self.fallback
        raise UnknownGroupError(f"group {group!r} was not seen when fitting")

    def query_many(self, groups) -> tuple[np.ndarray, np.ndarray]:
        pairs = [self.query(g) for g in groups]
        return np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs])

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "stats": [[g, mu.tolist(), sd.tolist()] for g, (mu, sd) in self.stats.items()],
            "fallback": None if self.fallback is None else [self.fallback[0].tolist(), self.fallback[1].tolist()],
        }


@dataclass(frozen=True)
class KnnContextEstimator:
    """Mean and spread of the k baseline rows nearest in standardized context."""

    feature_names: tuple[str, ...]
    context_names: tuple[str, ...]
    contexts: np.ndarray  # baseline contexts, (r, d)
    values: np.ndarray  # baseline primary features, (r, m)
    center: np.ndarray
    scale: np.ndarray
    k: int
    kind: str = "knn-regress"

    def query(self, c) -> tuple[np.ndarray, np.ndarray]:
        mu, sd = self.query_many(np.atleast_2d(np.asarray(c, dtype=float)))
        return mu[0], sd[0]

    def query_many(self, C) -> tuple[np.ndarray, np.ndarray]:
        C = np.atleast_2d(np.asarray(C, dtype=float))
        Z = (self.contexts - self.center) / self.scale
        Q = (C - self.center) / self.scale
        mus, sds = [], []
        for q in Q:
            d2 = ((Z - q) ** 2).sum(axis=1)
            # stable sort: ties go to the earlier baseline row; re-sorting the
            # chosen rows keeps summation order equal to a plain column mean
            idx = np.sort(np.argsort(d2, kind="stable")[: self.k])
            mu, sd = mean_std(self.values[idx])
            mus.append(mu)
            sds.append(_floor(sd))
        return np.array(mus), np.array(sds)

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "context_names": list(self.context_names),
            "contexts": self.contexts.tolist(),
            "values": self.values.tolist(),
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
            "k": self.k,
        }


@dataclass(frozen=True)
class LinearContextEstimator:
    """Least-squares mean in context (with intercept); constant residual spread."""

    feature_names: tuple[str, ...]
    context_names: tuple[str, ...]
    coef: np.ndarray  # (1 + d, m), intercept first
    sigma: np.ndarray  # (m,)
    intercept_only: bool = False
    kind: str = "linear-regress"

    def query(self, c) -> tuple[np.ndarray, np.ndarray]:
        mu, sd = self.query_many(np.atleast_2d(np.asarray(c, dtype=float)))
        return mu[0], sd[0]

    def query_many(self, C) -> tuple[np.ndarray, np.ndarray]:
        C = np.atleast_2d(np.asarray(C, dtype=float))
        design = np.column_stack([np.ones(len(C)), C])
        mu = design @ self.coef
        return mu, np.broadcast_to(self.sigma, mu.shape).copy()

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "feature_names": list(self.feature_names),
            "context_names": list(self.context_names),
            "coef": self.coef.tolist(),
            "sigma": self.sigma.tolist(),
            "intercept_only": self.intercept_only,
        }


ContextEstimator = GroupStatsEstimator | KnnContextEstimator | LinearContextEstimator


def estimator_from_record(rec: dict) -> ContextEstimator:
    kind = rec["kind"]
    names = tuple(rec["feature_names"])
    arr = lambda v: np.asarray(v, dtype=float)  # noqa: E731
    if kind == "group-stats":
        stats = {g: (arr(mu), arr(sd)) for g, mu, sd in rec["stats"]}
        fb = rec["fallback"]
        return GroupStatsEstimator(names, stats, None if fb is None else (arr(fb[0]), arr(fb[1])))
    if kind == "knn-regress":
        return KnnContextEstimator(
            names,
            tuple(rec["context_names"]),
            arr(rec["contexts"]),
            arr(rec["values"]),
            arr(rec["center"]),
            arr(rec["scale"]),
            int(rec["k"]),
        )
    if kind == "linear-regress":
        return LinearContextEstimator(
            names, tuple(rec["context_names"]), arr(rec["coef"]), arr(rec["sigma"]), bool(rec["intercept_only"])
        )
    raise ValueError(f"unknown estimator kind {kind!r}")


def context_columns(dataset: Dataset, names=None) -> tuple[list[str], np.ndarray]:
    """Names and values of the continuous contextual columns (or ``names``)."""
    schema = dataset.schema
    if names is None:
        names = [
            schema.feature_names[i]
            for i in schema.indices(FeatureRole.CONTEXTUAL)
            if not schema.discrete[i]
        ]
    names = list(names)
    if not names:
        raise NormalizationError("dataset has no continuous contextual columns")
    idx = [schema.index(n) for n in names]
    for n, i in zip(names, idx):
        if schema.roles[i] is not FeatureRole.CONTEXTUAL:
            raise NormalizationError(f"column {n!r} is not contextual")
    return names, dataset.X[:, idx]


def fit_context_estimator(
    train: Dataset,
    kind: str,
    *,
    k: int = 5,
    context_names=None,
    allow_unknown_groups: bool = False,
) -> ContextEstimator:
    """Fit a context -> (mean, spread) estimator for the primary features.

    ``group-stats`` keys on the observation group tag and uses every row.
    ``knn-regress`` and ``linear-regress`` use only baseline-flagged rows
    and the continuous contextual columns (or ``context_names``).
    """
    names = tuple(train.schema.names(FeatureRole.PRIMARY))
    X = train.columns(FeatureRole.PRIMARY)

    if kind == "group-stats":
        if not train.has_groups:
            raise NormalizationError("group-stats needs a group tag on every row")
        groups = train.groups
        stats, small = {}, []
        for g in dict.fromkeys(groups.tolist()):
            rows = X[groups == g]
            if len(rows) < 2:
                small.append(f"group {g!r}: {len(rows)} row")
                continue
            mu, sd = mean_std(rows)
            stats[g] = (mu, _floor(sd))
        if small:
            raise NormalizationError("group-stats needs at least 2 rows per group", small)
        fallback = None
        if allow_unknown_groups:
            mu, sd = mean_std(X)
            fallback = (mu, _floor(sd))
        return GroupStatsEstimator(names, stats, fallback)

    if kind not in ESTIMATOR_KINDS:
        raise ValueError(f"unknown estimator kind {kind!r}")
    cnames, C = context_columns(train, context_names)
    base = train.baseline
    C, V = C[base], X[base]
    d = C.shape[1]

    if kind == "knn-regress":
        need = max(k, d + 2)
        if len(V) < need:
            raise NormalizationError(f"knn-regress needs {need} baseline rows, got {len(V)}")
        center, scale = mean_std(C)
        return KnnContextEstimator(names, tuple(cnames), C.copy(), V.copy(), center, _floor(scale), k)

    if len(V) < d + 2:
        raise NormalizationError(f"linear-regress needs {d + 2} baseline rows, got {len(V)}")
    design = np.column_stack([np.ones(len(C)), C])
    fit = solve_least_squares(design, V)
    intercept_only = False
    if fit.rank_deficient:
        warnings.warn("singular context design matrix; falling back to intercept-only fit", RuntimeWarning)
        coef = np.zeros((d + 1, V.shape[1]))
        coef[0] = V.mean(axis=0)
        intercept_only = True
    else:
        coef = fit.coef
    resid = V - design @ coef
    sigma = _floor(resid.std(axis=0, ddof=1))
    return LinearContextEstimator(names, tuple(cnames), coef, sigma, intercept_only)


def contextual_normalize(estimator: ContextEstimator, x, c) -> np.ndarray:
    """``(x - mu(c)) / sigma(c)`` for one feature vector and its context.

    ``c`` is the group key for group-stats estimators and a context vector
    otherwise.
    """
    x = np.asarray(x, dtype=float)
    mu, sd = estimator.query(c)
    if x.shape != mu.shape:
        raise ValueError(f"expected {mu.shape[0]} features, got {x.shape}")
    return (x - mu) / sd


def denormalize(estimator: ContextEstimator, v, c) -> np.ndarray:
    mu, sd = estimator.query(c)
    return np.asarray(v, dtype=float) * sd + mu


def _replace_primary(dataset: Dataset, V: np.ndarray) -> Dataset:
    X = np.array(dataset.X)
    X[:, dataset.schema.indices(FeatureRole.PRIMARY)] = V
    return dataset.with_features(dataset.schema, X)


def transform_plain(model: NormalizationModel, dataset: Dataset) -> Dataset:
    return _replace_primary(dataset, apply_plain(model, dataset.columns(FeatureRole.PRIMARY)))


def transform_contextual(estimator: ContextEstimator, dataset: Dataset) -> Dataset:
    X = dataset.columns(FeatureRole.PRIMARY)
    if isinstance(estimator, GroupStatsEstimator):
        mu, sd = estimator.query_many(dataset.groups.tolist())
    else:
        _, C = context_columns(dataset, estimator.context_names)
        mu, sd = estimator.query_many(C)
    return _replace_primary(dataset, (X - mu) / sd)
