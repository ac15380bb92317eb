import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import context_flip_rows, copy_coin_rows, discrete_dataset, xor_rows
from ctxlearn.core import Dataset, FeatureRole, FeatureSchema
from ctxlearn.featrole import (
    RoleDetectionError,
    classify_roles,
    estimate_distribution,
    is_context_sensitive,
    is_contextual,
    is_primary,
)

P, C, I = FeatureRole.PRIMARY, FeatureRole.CONTEXTUAL, FeatureRole.IRRELEVANT


# --- brute-force oracle: direct row counting, independent of the module ---


def _cond(rows, a0, given):
    """p(x0 = a0 | x_pos = val for pos, val in given) by counting rows."""
    match = [r for r in rows if all(r[p] == v for p, v in given.items())]
    if not match:
        return None
    return Fraction(sum(r[0] == a0 for r in match), len(match))


def oracle_roles(rows, tol=0):
    n = len(rows[0]) - 1
    classes = sorted({r[0] for r in rows})
    values = [sorted({r[p] for r in rows}) for p in range(n + 1)]
    roles = {}
    for i in range(1, n + 1):
        primary = any(
            (pc := _cond(rows, a0, {i: ai})) is not None and abs(pc - _cond(rows, a0, {})) > tol
            for a0 in classes
            for ai in values[i]
        )
        if primary:
            roles[i] = P
            continue
        contextual = False
        for assign in itertools.product(*values[1:]):
            full = {p + 1: v for p, v in enumerate(assign)}
            rest = {p: v for p, v in full.items() if p != i}
            for a0 in classes:
                pf = _cond(rows, a0, full)
                if pf is not None and abs(pf - _cond(rows, a0, rest)) > tol:
                    contextual = True
        roles[i] = C if contextual else I
    return roles


def oracle_sensitive(rows, i, j, tol=0):
    classes = sorted({r[0] for r in rows})
    for ai, aj in itertools.product(sorted({r[i] for r in rows}), sorted({r[j] for r in rows})):
        for a0 in classes:
            pij = _cond(rows, a0, {i: ai, j: aj})
            if pij is not None and abs(pij - _cond(rows, a0, {i: ai})) > tol:
                return True
    return False


# --- distribution ---


def test_xor_distribution_uniform():
    dist = estimate_distribution(discrete_dataset(xor_rows()))
    assert dist.total == 4
    assert all(p == 0.25 for p in dist.probabilities().values())
    assert abs(sum(dist.probabilities().values()) - 1) < 1e-12


def test_duplicated_rows_same_distribution():
    once = estimate_distribution(discrete_dataset(xor_rows()))
    twice = estimate_distribution(discrete_dataset(xor_rows() * 2))
    assert once.probabilities() == twice.probabilities()


def test_continuous_column_rejected():
    schema = FeatureSchema(("a",), (P,), (0, 1), (False,))
    ds = Dataset.from_arrays(schema, np.array([[0.5], [1.5]]), [0, 1])
    with pytest.raises(RoleDetectionError):
        estimate_distribution(ds)


def test_cell_budget():
    rows = [(r % 2, r % 10, r % 11) for r in range(200)]
    with pytest.raises(RoleDetectionError):
        estimate_distribution(discrete_dataset(rows), cell_budget=100)


# --- individual tests ---


def test_copy_feature_is_primary():
    dist = estimate_distribution(discrete_dataset(copy_coin_rows()))
    flag, w = is_primary(dist, 1)
    assert flag and w.gap == pytest.approx(0.5)
    assert not is_contextual(dist, 1)[0]


def test_xor_not_primary_but_contextual():
    dist = estimate_distribution(discrete_dataset(xor_rows()))
    assert not is_primary(dist, 1)[0]
    flag, w = is_contextual(dist, 1)
    assert flag and w.gap == pytest.approx(0.5)
    assert set(w.assignment) == {0, 1, 2}


def test_independent_coin():
    rows = copy_coin_rows()
    dist = estimate_distribution(discrete_dataset(rows))
    assert oracle_roles(rows)[2] == I
    assert not is_primary(dist, 2)[0]
    assert not is_contextual(dist, 2)[0]


def test_index_out_of_range():
    dist = estimate_distribution(discrete_dataset(xor_rows()))
    with pytest.raises(IndexError):
        is_primary(dist, 0)
    with pytest.raises(IndexError):
        is_contextual(dist, 3)


# --- full reports against the oracle ---


@pytest.mark.parametrize(
    "rows, expected",
    [
        (xor_rows(), {1: C, 2: C}),
        (copy_coin_rows(), {1: P, 2: I}),
        (context_flip_rows(), {1: P, 2: C}),
    ],
    ids=["xor", "copy+coin", "context-flip"],
)
def test_constructed_tables(rows, expected):
    assert oracle_roles(rows) == expected
    report = classify_roles(discrete_dataset(rows), tolerance=0)
    assert {f.index: f.role for f in report.features} == expected


def test_context_flip_sensitivity():
    rows = context_flip_rows()
    assert oracle_sensitive(rows, 1, 2)
    dist = estimate_distribution(discrete_dataset(rows))
    flag, w = is_context_sensitive(dist, 1, 2)
    assert flag
    report = classify_roles(discrete_dataset(rows))
    (pair,) = report.sensitivity
    assert (pair.primary, pair.contextual, pair.sensitive) == (1, 2, True)
    # p(x0=a | x1=a) = 3/4, conditioned on x2 it becomes 1 or 0
    assert pair.witness.gap == pytest.approx(0.75)


def test_render_and_records():
    report = classify_roles(discrete_dataset(context_flip_rows()))
    text = report.render()
    assert "primary" in text and "contextual" in text
    recs = report.to_records()
    assert [r["kind"] for r in recs] == ["role", "role", "sensitivity"]


# --- properties ---

tables = st.lists(
    st.tuples(st.integers(0, 2), st.integers(0, 1), st.integers(0, 2), st.integers(0, 1)),
    min_size=1,
    max_size=24,
)


@settings(max_examples=60, deadline=None)
@given(tables, st.randoms(use_true_random=False))
def test_matches_oracle_and_is_order_and_scale_invariant(rows, rnd):
    base = classify_roles(discrete_dataset(rows), tolerance=0)
    roles = {f.index: f.role for f in base.features}
    assert roles == oracle_roles(rows)
    for v in base.sensitivity:
        assert v.sensitive == oracle_sensitive(rows, v.primary, v.contextual)

    shuffled = list(rows)
    rnd.shuffle(shuffled)
    ds = discrete_dataset(shuffled)
    if ds.schema.class_values == discrete_dataset(rows).schema.class_values:
        assert classify_roles(ds, tolerance=0) == base
    assert classify_roles(discrete_dataset(rows * 2), tolerance=0) == base
