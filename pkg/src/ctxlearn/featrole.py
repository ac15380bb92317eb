"""Empirical feature-role detection on small discrete datasets.

The joint distribution of (class, x1..xn) is estimated by relative
frequencies; the primary / contextual / irrelevant tests and the pairwise
context-sensitivity test are then evaluated exactly by enumerating the
cells with positive probability.  Conditioning events of probability zero
are skipped.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable

from ctxlearn.core import Dataset, FeatureRole, validate

DEFAULT_TOLERANCE = 1e-9
DEFAULT_CELL_BUDGET = 10**6
MAX_FEATURES = 12


class RoleDetectionError(ValueError):
    pass


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Joint frequency table over (x0, x1, ..., xn).

    ``counts`` maps full assignments ``(a0, a1, ..., an)`` to row counts.
    Probabilities are exact fractions of ``total``.
    """

    counts: dict[tuple, int]
    total: int
    feature_names: tuple[str, ...]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def prob(self, cell: tuple) -> Fraction:
        return Fraction(self.counts.get(cell, 0), self.total)

    def probabilities(self) -> dict[tuple, float]:
        return {cell: c / self.total for cell, c in self.counts.items()}

    def marginal(self, positions: tuple[int, ...]) -> dict[tuple, int]:
        """Counts of the table projected onto ``positions`` (0 is the class)."""
        out: dict[tuple, int] = defaultdict(int)
        for cell, c in self.counts.items():
            out[tuple(cell[p] for p in positions)] += c
        return dict(out)

    def classes(self) -> list:
        return sorted({cell[0] for cell in self.counts}, key=_sort_key)


@dataclass(frozen=True)
class Witness:
    """Value assignment realising a probability inequality.

    ``assignment`` maps 0 (the class) and feature indices (1-based) to
    values; ``gap`` is the absolute difference of the two probabilities.
    """

    assignment: dict[int, Hashable]
    gap: float


@dataclass(frozen=True)
class FeatureVerdict:
    index: int
    name: str
    role: FeatureRole
    witness: Witness | None


@dataclass(frozen=True)
class SensitivityVerdict:
    primary: int
    contextual: int
    sensitive: bool
    witness: Witness | None


@dataclass(frozen=True)
class RoleReport:
    features: tuple[FeatureVerdict, ...]
    sensitivity: tuple[SensitivityVerdict, ...] = field(default_factory=tuple)

    def roles(self) -> dict[str, FeatureRole]:
        return {f.name: f.role for f in self.features}

    def render(self) -> str:
        lines = [f"{'feature':<16} {'role':<11} {'gap':>8}  witness"]
        for f in self.features:
            gap = f"{f.witness.gap:.4f}" if f.witness else "-"
            lines.append(f"{f.name:<16} {f.role.value:<11} {gap:>8}  {_fmt_witness(f.witness)}")
        if self.sensitivity:
            lines.append("")
            lines.append("context-sensitive pairs (primary <- contextual)")
            for s in self.sensitivity:
                p = self.features[s.primary - 1].name
                c = self.features[s.contextual - 1].name
                gap = f"{s.witness.gap:.4f}" if s.witness else "-"
                lines.append(f"{p} <- {c}: {'yes' if s.sensitive else 'no'} {gap} {_fmt_witness(s.witness)}")
        return "\n".join(lines)

    def to_records(self) -> list[dict]:
        recs = []
        for f in self.features:
            recs.append(
                {
                    "kind": "role",
                    "feature": f.name,
                    "role": f.role.value,
                    "gap": f.witness.gap if f.witness else None,
                    "witness": _witness_dict(f.witness),
                }
            )
        for s in self.sensitivity:
            recs.append(
                {
                    "kind": "sensitivity",
                    "primary": self.features[s.primary - 1].name,
                    "contextual": self.features[s.contextual - 1].name,
                    "sensitive": s.sensitive,
                    "gap": s.witness.gap if s.witness else None,
                    "witness": _witness_dict(s.witness),
                }
            )
        return recs


def _witness_dict(w: Witness | None):
    if w is None:
        return None
    return {("class" if k == 0 else f"x{k}"): v for k, v in sorted(w.assignment.items())}


def _fmt_witness(w: Witness | None) -> str:
    if w is None:
        return ""
    return " ".join(f"{k}={v}" for k, v in _witness_dict(w).items())


def _sort_key(v):
    return (str(type(v)), v)


def _code(v: float):
    return int(v) if float(v).is_integer() else v


def estimate_distribution(dataset: Dataset, cell_budget: int = DEFAULT_CELL_BUDGET) -> EmpiricalDistribution:
    schema = dataset.schema
    problems = validate(dataset)
    if problems:
        raise RoleDetectionError("invalid dataset: " + "; ".join(problems[:5]))
    if not len(dataset):
        raise RoleDetectionError("empty dataset")
    if schema.n_features > MAX_FEATURES:
        raise RoleDetectionError(f"{schema.n_features} features exceeds the limit of {MAX_FEATURES}")
    continuous = [name for name, d in zip(schema.feature_names, schema.discrete) if not d]
    if continuous:
        raise RoleDetectionError(f"continuous features not supported: {', '.join(continuous)}")

    cells = [(o.label,) + tuple(_code(v) for v in o.features) for o in dataset.observations]
    # Budget is the size of the full product table, not just observed cells.
    size = 1
    for pos in range(schema.n_features + 1):
        size *= len({c[pos] for c in cells})
    if size > cell_budget:
        raise RoleDetectionError(f"joint table has {size} cells, budget is {cell_budget}")
    return EmpiricalDistribution(dict(Counter(cells)), len(cells), schema.feature_names)


def _check_index(dist: EmpiricalDistribution, i: int):
    if not 1 <= i <= dist.n_features:
        raise IndexError(f"feature index {i} outside 1..{dist.n_features}")


def _conditional_gap(dist, classes, cond_a, cond_b, tolerance):
    """Largest |p(x0 | A) - p(x0 | B)| where B's positions are a subset of A's.

    Enumerates every assignment of the A positions with positive probability.
    Returns (gap, witness assignment) for the first maximal gap over
    tolerance, else (max gap, None).
    """
    joint_a = dist.marginal((0,) + cond_a)
    cond_a_counts = dist.marginal(cond_a)
    joint_b = dist.marginal((0,) + cond_b)
    cond_b_counts = dist.marginal(cond_b)
    b_in_a = [cond_a.index(p) for p in cond_b]

    best_gap, best = Fraction(0), None
    for key_a in sorted(cond_a_counts, key=lambda k: tuple(map(_sort_key, k))):
        na = cond_a_counts[key_a]
        key_b = tuple(key_a[j] for j in b_in_a)
        nb = cond_b_counts[key_b]
        for a0 in classes:
            pa = Fraction(joint_a.get((a0,) + key_a, 0), na)
            pb = Fraction(joint_b.get((a0,) + key_b, 0), nb)
            gap = abs(pa - pb)
            if gap > best_gap:
                best_gap = gap
                best = {0: a0, **{p: v for p, v in zip(cond_a, key_a)}}
    if best_gap > tolerance:
        return float(best_gap), best
    return float(best_gap), None


def is_primary(dist: EmpiricalDistribution, i: int, tolerance: float = DEFAULT_TOLERANCE):
    """Does x_i alone shift the class distribution?

    Returns ``(flag, witness)``; the witness holds the class value and the
    feature value with the largest gap ``|p(x0=a0 | xi=ai) - p(x0=a0)|``.
    """
    _check_index(dist, i)
    gap, assignment = _conditional_gap(dist, dist.classes(), (i,), (), tolerance)
    if assignment is None:
        return False, None
    return True, Witness(assignment, gap)


def is_contextual(dist: EmpiricalDistribution, i: int, tolerance: float = DEFAULT_TOLERANCE):
    """Non-primary feature that matters once all other features are known."""
    _check_index(dist, i)
    if is_primary(dist, i, tolerance)[0]:
        return False, None
    n = dist.n_features
    everything = tuple(range(1, n + 1))
    others = tuple(p for p in everything if p != i)
    gap, assignment = _conditional_gap(dist, dist.classes(), everything, others, tolerance)
    if assignment is None:
        return False, None
    return True, Witness(assignment, gap)


def is_context_sensitive(dist: EmpiricalDistribution, i: int, j: int, tolerance: float = DEFAULT_TOLERANCE):
    """Compare p(x0 | xi, xj) with p(x0 | xi) over positive-probability (ai, aj)."""
    _check_index(dist, i)
    _check_index(dist, j)
    if i == j:
        raise ValueError("primary and contextual indices must differ")
    gap, assignment = _conditional_gap(dist, dist.classes(), (i, j), (i,), tolerance)
    if assignment is None:
        return False, None
    return True, Witness(assignment, gap)


def classify_roles(
    dataset: Dataset, tolerance: float = DEFAULT_TOLERANCE, cell_budget: int = DEFAULT_CELL_BUDGET
) -> RoleReport:
    dist = estimate_distribution(dataset, cell_budget)
    verdicts = []
    for i in range(1, dist.n_features + 1):
        name = dist.feature_names[i - 1]
        flag, w = is_primary(dist, i, tolerance)
        if flag:
            verdicts.append(FeatureVerdict(i, name, FeatureRole.PRIMARY, w))
            continue
        flag, w = is_contextual(dist, i, tolerance)
        role = FeatureRole.CONTEXTUAL if flag else FeatureRole.IRRELEVANT
        verdicts.append(FeatureVerdict(i, name, role, w))

    pairs = []
    for p in verdicts:
        if p.role is not FeatureRole.PRIMARY:
            continue
        for c in verdicts:
            if c.role is FeatureRole.CONTEXTUAL:
                flag, w = is_context_sensitive(dist, p.index, c.index, tolerance)
                pairs.append(SensitivityVerdict(p.index, c.index, flag, w))
    return RoleReport(tuple(verdicts), tuple(pairs))
