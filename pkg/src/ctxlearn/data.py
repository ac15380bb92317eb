"""Dataset ingestion: the vowel file, a synthetic context-shift generator and
the canonical CSV dump used for interchange.
"""

from __future__ import annotations

import csv
import hashlib
import io
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ctxlearn.core import Dataset, FeatureRole, FeatureSchema, SchemaError, validate


class DataFormatError(ValueError):
    pass


# --------------------------------------------------------------------------
# vowel data

VOWEL_FEATURES = tuple(f"f{i}" for i in range(10))
VOWEL_COLUMNS = {"split": 0, "speaker": 1, "sex": 2, **{f: 3 + i for i, f in enumerate(VOWEL_FEATURES)}, "class": 13}
VOWEL_COUNTS = {"train": 528, "test": 462}
VOWEL_CITATION = (
    "Deterding vowel data (vowel-context.data), UCI Machine Learning Repository, "
    "undocumented/connectionist-bench/vowel. 990 rows: 528 train (8 speakers), 462 test (7 speakers)."
)


def vowel_schema() -> FeatureSchema:
    names = VOWEL_FEATURES + ("speaker", "sex")
    roles = (FeatureRole.PRIMARY,) * 10 + (FeatureRole.CONTEXTUAL,) * 2
    return FeatureSchema(names, roles, tuple(range(11)), (False,) * 10 + (True, True))


def _split_line(line: str) -> list[str]:
    return line.replace(",", " ").split()


def load_vowel(path, columns: dict[str, int] | None = None) -> Dataset:
    """Read the vowel-context file (whitespace or comma separated).

    ``columns`` maps ``split``, ``speaker``, ``sex``, ``f0``..``f9`` and
    ``class`` to zero-based column positions.  Split code 0 is training.
    The speaker is stored both as a contextual column and as the group tag.
    Row counts that differ from 528/462 only produce a warning.
    """
    cols = dict(VOWEL_COLUMNS)
    if columns:
        cols.update(columns)
    width = max(cols.values()) + 1
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = _split_line(line)
            if not parts:
                continue
            if len(parts) < width:
                raise DataFormatError(f"{path}:{lineno}: expected {width} columns, found {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-numeric value in {line.strip()!r}") from None
            if not np.all(np.isfinite(vals)):
                raise DataFormatError(f"{path}:{lineno}: missing or non-finite value")
            rows.append((lineno, vals))

    X, labels, groups, splits = [], [], [], []
    for lineno, v in rows:
        speaker, sex, label = v[cols["speaker"]], v[cols["sex"]], v[cols["class"]]
        if not (float(label).is_integer() and 0 <= label <= 10):
            raise DataFormatError(f"{path}:{lineno}: class {label} outside 0..10")
        X.append([v[cols[f]] for f in VOWEL_FEATURES] + [speaker, sex])
        labels.append(int(label))
        groups.append(int(speaker))
        splits.append("train" if v[cols["split"]] == 0 else "test")
    ds = Dataset.from_arrays(vowel_schema(), np.array(X).reshape(-1, 12), labels, groups, None, splits)

    problems = validate(ds)
    if problems:
        raise DataFormatError("; ".join(problems[:5]))
    counts = {s: splits.count(s) for s in ("train", "test")}
    if counts != VOWEL_COUNTS:
        warnings.warn(f"vowel row counts {counts} differ from expected {VOWEL_COUNTS}", RuntimeWarning)
    return ds


# --------------------------------------------------------------------------
# synthetic context shift


@dataclass(frozen=True)
class ShiftScenario:
    """Parameters of the synthetic engine-style dataset.

    Class 0 is the healthy class.  ``class_means`` (k x m) and ``coupling``
    (m x d) are drawn from the seed unless given.  Each split draws its
    context uniformly from its own box; the boxes are disjoint.
    """

    seed: int = 0
    n_classes: int = 8
    n_features: int = 12
    context_dim: int = 2
    n_rows: int = 240
    class_scale: float = 1.0
    coupling_scale: float = 1.5
    noise_scale: float = 0.6
    healthy_fraction: float | None = 0.4
    baseline_fraction: float = 0.5
    cold_range: tuple[float, float] = (-2.0, -0.5)
    warm_range: tuple[float, float] = (0.5, 2.0)
    class_means: np.ndarray | None = field(default=None, repr=False, compare=False)
    coupling: np.ndarray | None = field(default=None, repr=False, compare=False)

    def check(self):
        for name, (lo, hi) in (("cold", self.cold_range), ("warm", self.warm_range)):
            if not hi > lo:
                raise ValueError(f"degenerate {name} context range {lo}..{hi}")
        a, b = sorted([self.cold_range, self.warm_range])
        if a[1] >= b[0]:
            raise ValueError("cold and warm context ranges overlap")
        if self.n_classes < 2 or self.n_features < 1 or self.context_dim < 1:
            raise ValueError("need >= 2 classes, >= 1 feature and >= 1 context dimension")
        if self.n_rows < 2 * self.n_classes:
            raise ValueError("too few rows for the number of classes")
        if self.healthy_fraction is not None and not 0 < self.healthy_fraction < 1:
            raise ValueError("healthy_fraction must lie in (0, 1)")
        if not 0 <= self.baseline_fraction <= 1:
            raise ValueError("baseline_fraction must lie in [0, 1]")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")


def shift_schema(scenario: ShiftScenario) -> FeatureSchema:
    names = tuple(f"x{i}" for i in range(scenario.n_features)) + tuple(
        f"c{j}" for j in range(scenario.context_dim)
    )
    roles = (FeatureRole.PRIMARY,) * scenario.n_features + (FeatureRole.CONTEXTUAL,) * scenario.context_dim
    return FeatureSchema(names, roles, tuple(range(scenario.n_classes)))


def scenario_parameters(scenario: ShiftScenario) -> tuple[np.ndarray, np.ndarray]:
    """Class means and coupling matrix actually used for ``scenario``."""
    rng = np.random.Generator(np.random.PCG64(scenario.seed))
    k, m, d = scenario.n_classes, scenario.n_features, scenario.context_dim
    means = rng.normal(0.0, scenario.class_scale, size=(k, m))
    means[0] = 0.0
    coupling = rng.normal(0.0, 1.0, size=(m, d)) * scenario.coupling_scale
    if scenario.class_means is not None:
        means = np.asarray(scenario.class_means, dtype=float).reshape(k, m)
    if scenario.coupling is not None:
        coupling = np.asarray(scenario.coupling, dtype=float).reshape(m, d)
    return means, coupling


def _class_column(n: int, k: int, healthy_fraction: float | None) -> np.ndarray:
    if healthy_fraction is None:
        return np.arange(n) % k
    n_healthy = int(round(healthy_fraction * n))
    return np.concatenate([np.zeros(n_healthy, dtype=int), 1 + np.arange(n - n_healthy) % (k - 1)])


def generate_shift(scenario: ShiftScenario | None = None) -> Dataset:
    """Draw a cold/warm dataset with linearly context-coupled features.

    Within each split a ``healthy_fraction`` share of rows is healthy and
    the rest cycle evenly through the fault classes (``None`` spreads all
    classes evenly).  Features are
    ``class_mean + coupling @ c + noise``.  A ``baseline_fraction`` share of
    the healthy rows (drawn from both splits) is flagged as baseline.
    Random numbers come from numpy's PCG64 generator, seeded by
    ``scenario.seed``.
    """
    scenario = scenario or ShiftScenario()
    scenario.check()
    means, coupling = scenario_parameters(scenario)
    # parameters use their own stream so overriding them leaves the rows unchanged
    rng = np.random.Generator(np.random.PCG64([scenario.seed, 1]))
    k, m, d = scenario.n_classes, scenario.n_features, scenario.context_dim

    half = scenario.n_rows // 2
    blocks = []
    for split, (lo, hi), n in (("cold", scenario.cold_range, half), ("warm", scenario.warm_range, scenario.n_rows - half)):
        labels = rng.permutation(_class_column(n, k, scenario.healthy_fraction))
        C = rng.uniform(lo, hi, size=(n, d))
        noise = rng.normal(0.0, 1.0, size=(n, m)) * scenario.noise_scale
        blocks.append((split, labels, C, means[labels] + C @ coupling.T + noise))

    splits = [s for s, lab, _, _ in blocks for _ in lab]
    labels = np.concatenate([b[1] for b in blocks])
    X = np.vstack([np.column_stack([b[3], b[2]]) for b in blocks])

    healthy = np.flatnonzero(labels == 0)
    n_base = int(round(scenario.baseline_fraction * len(healthy)))
    baseline = np.zeros(len(labels), dtype=bool)
    baseline[np.sort(rng.permutation(healthy)[:n_base])] = True
    return Dataset.from_arrays(shift_schema(scenario), X, labels.tolist(), None, baseline, splits)


# --------------------------------------------------------------------------
# canonical CSV dump
#
# Header: one cell per feature "name:role:kind", then the reserved columns
# "@label", "@group", "@baseline", "@split".  Empty cells mean "no value".


def _fmt(v: float) -> str:
    return repr(float(v))


def dump_csv(dataset: Dataset) -> str:
    s = dataset.schema
    header = [
        f"{n}:{r.value}:{'discrete' if d else 'continuous'}" for n, r, d in zip(s.feature_names, s.roles, s.discrete)
    ]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header + ["@label", "@group", "@baseline", "@split"])
    for o in dataset.observations:
        w.writerow(
            [_fmt(v) for v in o.features]
            + [o.label, "" if o.group is None else o.group, int(o.baseline), o.split or ""]
        )
    return buf.getvalue()


def read_csv_records(text: str) -> list[dict[str, str]]:
    """Rows of any header-first CSV text as dicts of raw strings."""
    return list(csv.DictReader(io.StringIO(text)))


def _scalar(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_csv(text: str, class_values=None) -> Dataset:
    """Inverse of :func:`dump_csv`.

    Class values default to the sorted distinct labels in the file.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty dataset file") from None
    specs = [h for h in header if not h.startswith("@")]
    if "@label" not in header:
        raise DataFormatError("header lacks an @label column")
    names, roles, discrete = [], [], []
    for h in specs:
        parts = h.split(":")
        if len(parts) not in (2, 3):
            raise DataFormatError(f"bad column header {h!r}; expected name:role[:kind]")
        names.append(parts[0])
        try:
            roles.append(FeatureRole.parse(parts[1]))
        except SchemaError as err:
            raise DataFormatError(f"column {parts[0]!r}: {err}") from None
        kind = parts[2] if len(parts) == 3 else "continuous"
        if kind not in ("discrete", "continuous"):
            raise DataFormatError(f"bad column kind {kind!r}")
        discrete.append(kind == "discrete")
    pos = {h: i for i, h in enumerate(header)}
    feat_pos = [pos[h] for h in specs]

    X, labels, groups, base, splits = [], [], [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataFormatError(f"line {lineno}: {len(row)} cells, header has {len(header)}")
        try:
            X.append([float(row[p]) for p in feat_pos])
        except ValueError:
            raise DataFormatError(f"line {lineno}: non-numeric feature value") from None
        labels.append(_scalar(row[pos["@label"]]))
        g = row[pos["@group"]] if "@group" in pos else ""
        groups.append(_scalar(g) if g != "" else None)
        b = row[pos["@baseline"]] if "@baseline" in pos else "0"
        base.append(b.strip().lower() in ("1", "true", "yes"))
        sp = row[pos["@split"]] if "@split" in pos else ""
        splits.append(sp or None)
    if class_values is None:
        class_values = tuple(sorted(set(labels), key=lambda v: (str(type(v)), v)))
    schema = FeatureSchema(tuple(names), tuple(roles), tuple(class_values), tuple(discrete))
    ds = Dataset.from_arrays(schema, np.array(X, dtype=float).reshape(-1, len(names)), labels, groups, base, splits)
    problems = validate(ds)
    if problems:
        raise DataFormatError("; ".join(problems[:5]))
    return ds


def load_csv(path) -> Dataset:
    return parse_csv(Path(path).read_text())


def fingerprint(dataset: Dataset) -> str:
    return hashlib.sha256(dump_csv(dataset).encode()).hexdigest()[:16]
