"""Data model shared by every other module.

A :class:`Dataset` is an immutable, ordered collection of :class:`Observation`
rows described by a :class:`FeatureSchema`.  Discrete features (speaker id,
sex, synthetic categories) are stored as small integer codes inside the same
float vector as continuous ones; the schema records which is which.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np


class SchemaError(ValueError):
    """Raised when a schema or projection request is malformed."""


class FeatureRole(enum.Enum):
    PRIMARY = "primary"
    CONTEXTUAL = "contextual"
    IRRELEVANT = "irrelevant"

    @classmethod
    def parse(cls, text: str) -> "FeatureRole":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise SchemaError(f"unknown feature role {text!r}") from None


@dataclass(frozen=True)
class FeatureSchema:
    """Names, roles and kinds of the feature columns plus the class set.

    ``discrete[i]`` is True when column ``i`` holds integer codes.  For
    contextual columns this is the context kind (discrete or continuous).
    """

    feature_names: tuple[str, ...]
    roles: tuple[FeatureRole, ...]
    class_values: tuple[Hashable, ...]
    discrete: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "roles", tuple(FeatureRole(r) for r in self.roles))
        object.__setattr__(self, "class_values", tuple(self.class_values))
        discrete = tuple(bool(d) for d in self.discrete) or (False,) * len(self.feature_names)
        object.__setattr__(self, "discrete", discrete)

        n = len(self.feature_names)
        if n < 1:
            raise SchemaError("schema needs at least one feature")
        if len(self.roles) != n or len(self.discrete) != n:
            raise SchemaError(
                f"names/roles/discrete lengths differ: {n}, {len(self.roles)}, {len(self.discrete)}"
            )
        if len(set(self.feature_names)) != n:
            raise SchemaError("duplicate feature names")
        if not self.class_values:
            raise SchemaError("class_values is empty")
        if len(set(self.class_values)) != len(self.class_values):
            raise SchemaError("duplicate class values")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def indices(self, role: FeatureRole) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r is role]

    def names(self, role: FeatureRole) -> list[str]:
        return [self.feature_names[i] for i in self.indices(role)]

    def index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise SchemaError(f"no feature named {name!r}") from None

    def class_index(self, label) -> int:
        return self.class_values.index(label)


@dataclass(frozen=True)
class Observation:
    """One row: class label, feature vector and optional tags.

    ``group`` carries a discrete context key that estimators use directly
    (the speaker, for the vowel data).  ``split`` is a free-form partition
    tag set by loaders ("train"/"test", "cold"/"warm").
    """

    label: Hashable
    features: tuple[float, ...]
    group: Hashable | None = None
    baseline: bool = False
    split: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(float(v) for v in self.features))


@dataclass(frozen=True)
class Dataset:
    schema: FeatureSchema
    observations: tuple[Observation, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))

    @classmethod
    def from_arrays(
        cls,
        schema: FeatureSchema,
        X,
        labels: Sequence,
        groups: Sequence | None = None,
        baseline: Sequence[bool] | None = None,
        splits: Sequence[str] | None = None,
    ) -> "Dataset":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        n = X.shape[0]
        if len(labels) != n:
            raise ValueError(f"{len(labels)} labels for {n} rows")
        groups = [None] * n if groups is None else list(groups)
        baseline = [False] * n if baseline is None else [bool(b) for b in baseline]
        splits = [None] * n if splits is None else list(splits)
        obs = tuple(
            Observation(_plain(labels[r]), tuple(X[r].tolist()), _plain(groups[r]), baseline[r], splits[r])
            for r in range(n)
        )
        ds = cls(schema, obs)
        ds.__dict__["X"] = _frozen(X.copy())
        return ds

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)

    @cached_property
    def X(self) -> np.ndarray:
        """Feature matrix, rows in dataset order.  Read-only."""
        if not self.observations:
            return _frozen(np.empty((0, self.schema.n_features)))
        return _frozen(np.array([o.features for o in self.observations], dtype=float))

    @cached_property
    def labels(self) -> np.ndarray:
        return _frozen(np.array([o.label for o in self.observations]))

    @cached_property
    def label_codes(self) -> np.ndarray:
        """Labels as indices into ``schema.class_values``."""
        lookup = {c: i for i, c in enumerate(self.schema.class_values)}
        return _frozen(np.array([lookup[o.label] for o in self.observations], dtype=int))

    @cached_property
    def groups(self) -> np.ndarray:
        return _frozen(np.array([o.group for o in self.observations], dtype=object))

    @cached_property
    def baseline(self) -> np.ndarray:
        return _frozen(np.array([o.baseline for o in self.observations], dtype=bool))

    @property
    def has_groups(self) -> bool:
        return bool(self.observations) and all(o.group is not None for o in self.observations)

    def columns(self, role: FeatureRole) -> np.ndarray:
        return self.X[:, self.schema.indices(role)]

    def subset(self, rows: Iterable[int]) -> "Dataset":
        return Dataset(self.schema, tuple(self.observations[r] for r in rows))

    def with_features(self, schema: FeatureSchema, X) -> "Dataset":
        """Same rows and tags, new feature matrix and schema."""
        X = np.asarray(X, dtype=float)
        if X.shape != (len(self), schema.n_features):
            raise ValueError(f"feature matrix shape {X.shape} does not fit {len(self)} rows x {schema.n_features}")
        obs = tuple(replace(o, features=tuple(X[r].tolist())) for r, o in enumerate(self.observations))
        ds = Dataset(schema, obs)
        ds.__dict__["X"] = _frozen(X.copy())
        return ds


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _plain(v):
    # numpy scalars -> python scalars so observations compare and hash cleanly
    return v.item() if isinstance(v, np.generic) else v


def validate(dataset: Dataset) -> list[str]:
    """Check every row against the schema.

    Returns an empty list when the dataset is well formed, otherwise one
    message per violation, each naming the row index.
    """
    schema = dataset.schema
    n = schema.n_features
    classes = set(schema.class_values)
    errors = []
    for r, obs in enumerate(dataset.observations):
        if len(obs.features) != n:
            errors.append(f"row {r}: {len(obs.features)} features, schema has {n}")
        elif not all(math.isfinite(v) for v in obs.features):
            errors.append(f"row {r}: missing or non-finite feature value")
        else:
            for i, v in enumerate(obs.features):
                if schema.discrete[i] and (v < 0 or v != int(v)):
                    errors.append(f"row {r}: discrete feature {schema.feature_names[i]!r} has value {v}")
        if obs.label not in classes:
            errors.append(f"row {r}: label {obs.label!r} not in class set")
    return errors


def project(dataset: Dataset, role: FeatureRole) -> Dataset:
    """Keep only the columns with ``role``; row order and tags preserved."""
    schema = dataset.schema
    idx = schema.indices(role)
    if not idx:
        raise SchemaError(f"no column has role {role.value}")
    sub = FeatureSchema(
        tuple(schema.feature_names[i] for i in idx),
        tuple(schema.roles[i] for i in idx),
        schema.class_values,
        tuple(schema.discrete[i] for i in idx),
    )
    return dataset.with_features(sub, dataset.X[:, idx])


def split_by(dataset: Dataset, predicate: Callable[[Observation], bool]) -> tuple[Dataset, Dataset]:
    keep, rest = [], []
    for obs in dataset.observations:
        (keep if predicate(obs) else rest).append(obs)
    return Dataset(dataset.schema, tuple(keep)), Dataset(dataset.schema, tuple(rest))
