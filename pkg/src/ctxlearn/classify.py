"""Nearest-neighbour and linear-regression classifiers, contextual selection.

Classifiers read only the primary columns of a dataset.  Every model has a
``predict_dataset`` method so :func:`evaluate` can treat them uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable

import numpy as np

from ctxlearn.core import Dataset, FeatureRole
from ctxlearn.lstsq import solve_least_squares


class ClassifierError(ValueError):
    pass


def _primary(dataset: Dataset) -> np.ndarray:
    return dataset.columns(FeatureRole.PRIMARY)


@dataclass(frozen=True)
class NearestNeighborModel:
    X: np.ndarray
    codes: np.ndarray  # label indices into class_values
    class_values: tuple
    feature_names: tuple[str, ...]
    k: int = 1

    def predict_codes(self, Q, chunk: int = 512) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[1] != self.X.shape[1]:
            raise ClassifierError(f"expected {self.X.shape[1]} features, got {Q.shape[1]}")
        out = np.empty(len(Q), dtype=int)
        n_cls = len(self.class_values)
        for start in range(0, len(Q), chunk):
            q = Q[start : start + chunk]
            d2 = ((q[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
            if self.k == 1:
                # argmin returns the first minimum: ties go to the lowest row
                out[start : start + len(q)] = self.codes[d2.argmin(axis=1)]
                continue
            nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
            for r, idx in enumerate(nearest):
                out[start + r] = np.bincount(self.codes[idx], minlength=n_cls).argmax()
        return out

    def predict(self, x) -> Hashable:
        return self.class_values[self.predict_codes(x)[0]]

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        return self.predict_codes(_primary(dataset))


def nn_fit(train: Dataset, k: int = 1) -> NearestNeighborModel:
    if len(train) == 0:
        raise ClassifierError("empty training set")
    if k < 1:
        raise ClassifierError("k must be >= 1")
    X = np.array(_primary(train))
    return NearestNeighborModel(
        X, np.array(train.label_codes), train.schema.class_values, tuple(train.schema.names(FeatureRole.PRIMARY)), k
    )


def nn_predict(model: NearestNeighborModel, x) -> Hashable:
    return model.predict(x)


@dataclass(frozen=True)
class LinearModel:
    """One-vs-rest indicator regression; ``coef[0]`` is the intercept row."""

    coef: np.ndarray  # (p + 1, n_classes)
    class_values: tuple
    feature_names: tuple[str, ...]
    rank: int
    residual_norms: np.ndarray
    rank_deficient: bool

    def responses(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[1] != self.coef.shape[0] - 1:
            raise ClassifierError(f"expected {self.coef.shape[0] - 1} features, got {Q.shape[1]}")
        return np.column_stack([np.ones(len(Q)), Q]) @ self.coef

    def predict_codes(self, Q) -> np.ndarray:
        return self.responses(Q).argmax(axis=1)

    def predict(self, x) -> Hashable:
        return self.class_values[self.predict_codes(x)[0]]

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        return self.predict_codes(_primary(dataset))


def indicator_targets(codes: np.ndarray, n_classes: int) -> np.ndarray:
    Y = np.zeros((len(codes), n_classes))
    Y[np.arange(len(codes)), codes] = 1.0
    return Y


def mlr_fit(train: Dataset) -> LinearModel:
    if len(train) == 0:
        raise ClassifierError("empty training set")
    X = _primary(train)
    design = np.column_stack([np.ones(len(X)), X])
    Y = indicator_targets(train.label_codes, len(train.schema.class_values))
    fit = solve_least_squares(design, Y)
    return LinearModel(
        fit.coef,
        train.schema.class_values,
        tuple(train.schema.names(FeatureRole.PRIMARY)),
        fit.rank,
        fit.residual_norms,
        fit.rank_deficient,
    )


def mlr_predict(model: LinearModel, x) -> Hashable:
    return model.predict(x)


FITTERS = {"nn": nn_fit, "mlr": mlr_fit}


@dataclass(frozen=True)
class SelectionModel:
    """Per-context sub-classifiers with a global fallback.

    Context values never seen in training (or whose group was too small to
    get its own model) are routed to ``fallback``.
    """

    context_column: str
    submodels: dict
    fallback: object
    unseen_rule: str = "fallback"

    def _context_values(self, dataset: Dataset):
        if self.context_column == "group":
            return dataset.groups.tolist()
        return dataset.X[:, dataset.schema.index(self.context_column)].tolist()

    def predict(self, x, c) -> Hashable:
        model = self.submodels.get(c, self.fallback)
        return model.predict(x)

    def predict_dataset(self, dataset: Dataset) -> np.ndarray:
        ctx = self._context_values(dataset)
        X = _primary(dataset)
        out = np.empty(len(dataset), dtype=int)
        for value in dict.fromkeys(ctx):
            rows = np.array([c == value for c in ctx])
            out[rows] = self.submodels.get(value, self.fallback).predict_codes(X[rows])
        return out


def selection_fit(train: Dataset, context_column: str, base: str = "nn", **options) -> SelectionModel:
    """Fit one ``base`` classifier per value of a discrete context column.

    ``context_column`` names a contextual column, or ``"group"`` for the
    observation group tag.
    """
    if base not in FITTERS:
        raise ClassifierError(f"unknown base classifier {base!r}")
    fit = FITTERS[base]
    if context_column == "group":
        if not train.has_groups:
            raise ClassifierError("training rows carry no group tag")
        ctx = train.groups.tolist()
    else:
        i = train.schema.index(context_column)
        if not train.schema.discrete[i]:
            raise ClassifierError(f"selection column {context_column!r} must be discrete")
        ctx = train.X[:, i].tolist()
    fallback = fit(train, **options)
    min_rows = len(train.schema.class_values)
    subs = {}
    for value in dict.fromkeys(ctx):
        rows = [r for r, c in enumerate(ctx) if c == value]
        if len(rows) >= min_rows:
            subs[value] = fit(train.subset(rows), **options)
    return SelectionModel(context_column, subs, fallback)


def selection_predict(model: SelectionModel, x, c) -> Hashable:
    return model.predict(x, c)


@dataclass(frozen=True)
class EvalResult:
    correct: int
    total: int
    confusion: np.ndarray = field(repr=False)  # rows: true class, cols: predicted
    class_values: tuple = ()

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    @property
    def percent(self) -> int:
        return round(100 * self.accuracy)

    def __add__(self, other: "EvalResult") -> "EvalResult":
        if self.class_values != other.class_values:
            raise ClassifierError("cannot add results over different class sets")
        return EvalResult(
            self.correct + other.correct, self.total + other.total, self.confusion + other.confusion, self.class_values
        )


def evaluate(model, test: Dataset) -> EvalResult:
    classes = test.schema.class_values
    model_classes = getattr(model, "class_values", None)
    if model_classes is None and hasattr(model, "fallback"):
        model_classes = model.fallback.class_values
    if model_classes is not None and tuple(model_classes) != tuple(classes):
        raise ClassifierError("model and test set disagree on the class set")
    names = getattr(model, "feature_names", None)
    if names is not None and tuple(names) != tuple(test.schema.names(FeatureRole.PRIMARY)):
        raise ClassifierError("model and test set disagree on the primary features")
    pred = np.asarray(model.predict_dataset(test), dtype=int)
    true = test.label_codes
    conf = np.zeros((len(classes), len(classes)), dtype=int)
    np.add.at(conf, (true, pred), 1)
    return EvalResult(int(np.trace(conf)), len(test), conf, tuple(classes))
