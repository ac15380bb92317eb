import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ctxlearn.core import Dataset, FeatureRole, FeatureSchema
from ctxlearn.normalize import (
    SIGMA_FLOOR,
    GroupStatsEstimator,
    LinearContextEstimator,
    NormalizationError,
    NormalizationModel,
    UnknownGroupError,
    apply_plain,
    contextual_normalize,
    denormalize,
    estimator_from_record,
    fit_context_estimator,
    fit_plain,
    transform_contextual,
    transform_plain,
)

P, C = FeatureRole.PRIMARY, FeatureRole.CONTEXTUAL


def one_feature(values, groups=None, baseline=None):
    schema = FeatureSchema(("x",), (P,), (0,))
    return Dataset.from_arrays(schema, np.array(values, float)[:, None], [0] * len(values), groups, baseline)


def with_context(X, Cx, baseline=None):
    X, Cx = np.atleast_2d(X), np.asarray(Cx, float).reshape(len(X), -1)
    m, d = X.shape[1], Cx.shape[1]
    schema = FeatureSchema(
        tuple(f"x{i}" for i in range(m)) + tuple(f"c{j}" for j in range(d)), (P,) * m + (C,) * d, (0,)
    )
    base = [True] * len(X) if baseline is None else baseline
    return Dataset.from_arrays(schema, np.column_stack([X, Cx]), [0] * len(X), None, base)


# --- plain methods ---


def test_minmax_params_and_apply():
    m = fit_plain(one_feature([0, 5, 10]), "minmax")
    assert (m.params["min"][0], m.params["max"][0]) == (0, 10)
    assert apply_plain(m, [5.0])[0] == 0.5
    assert apply_plain(m, [20.0])[0] == 2.0  # not clamped


def test_minmax_constant_feature_reports_feature():
    with pytest.raises(NormalizationError) as err:
        fit_plain(one_feature([3, 3, 3]), "minmax")
    assert err.value.problems and "x" in err.value.problems[0]


def test_avgdev_sample_convention():
    m = fit_plain(one_feature([2, 4, 6]), "avgdev")
    # deviations -2, 0, 2: squares sum to 8, divided by n - 1 = 2
    assert m.params["mean"][0] == 4
    assert m.params["std"][0] == pytest.approx(2.0)
    assert apply_plain(m, [8.0])[0] == pytest.approx(2.0)


def test_avgdev_near_constant_rejected():
    with pytest.raises(NormalizationError):
        fit_plain(one_feature([1, 1, 1 + 1e-9]), "avgdev")


def test_percentile_midrank():
    m = fit_plain(one_feature(range(1, 11)), "percentile")
    # one value below 2, one tie at 2: 0.1 + 0.05
    assert apply_plain(m, [2.0])[0] == pytest.approx(0.15)
    assert apply_plain(m, [1.5])[0] == pytest.approx(0.1)
    assert apply_plain(m, [-5.0])[0] == 0.0
    assert apply_plain(m, [50.0])[0] == 1.0


def test_baseline_avgdev_uses_only_baseline_rows():
    ds = one_feature([0, 2, 100, 200], baseline=[True, True, False, False])
    m = fit_plain(ds, "baseline-avgdev")
    assert m.params["mean"][0] == 1.0
    with pytest.raises(NormalizationError):
        fit_plain(one_feature([0, 2], baseline=[True, False]), "baseline-avgdev")


def test_plain_round_trip_record():
    ds = one_feature([1, 4, 9, 16])
    for method in ("minmax", "avgdev", "percentile"):
        m = fit_plain(ds, method)
        back = NormalizationModel.from_record(json.loads(json.dumps(m.to_record())))
        x = np.array([[3.3], [10.0]])
        np.testing.assert_array_equal(apply_plain(m, x), apply_plain(back, x))


def test_transform_touches_only_primary():
    ds = with_context(np.array([[1.0], [3.0], [5.0]]), [7.0, 8.0, 9.0])
    out = transform_plain(fit_plain(ds, "avgdev"), ds)
    np.testing.assert_array_equal(out.X[:, 1], ds.X[:, 1])
    np.testing.assert_allclose(out.X[:, 0], [-1, 0, 1])


# --- contextual ---


def test_contextual_identity_and_arithmetic():
    est = GroupStatsEstimator(("a", "b"), {"s": (np.zeros(2), np.ones(2))})
    np.testing.assert_array_equal(contextual_normalize(est, [3.0, -2.0], "s"), [3.0, -2.0])
    est = GroupStatsEstimator(("a",), {"s": (np.array([3.0]), np.array([2.0]))})
    assert contextual_normalize(est, [5.0], "s")[0] == 1.0


def test_group_stats_two_values():
    est = fit_context_estimator(one_feature([1, 3], groups=["s", "s"]), "group-stats")
    mu, sd = est.query("s")
    assert mu[0] == 2.0
    assert sd[0] == pytest.approx(math.sqrt(2))


def test_group_stats_unknown_group():
    est = fit_context_estimator(one_feature([1, 3], groups=["s", "s"]), "group-stats")
    with pytest.raises(UnknownGroupError):
        contextual_normalize(est, [1.0], "t")
    est = fit_context_estimator(one_feature([1, 3], groups=["s", "s"]), "group-stats", allow_unknown_groups=True)
    assert contextual_normalize(est, [2.0], "t")[0] == 0.0


def test_group_stats_needs_two_rows():
    with pytest.raises(NormalizationError):
        fit_context_estimator(one_feature([1, 3, 5], groups=["s", "s", "t"]), "group-stats")


def test_group_stats_on_speaker_rows(vowel):
    # one speaker's six repetitions of one vowel, normalized by their own stats
    rows = [r for r, o in enumerate(vowel) if o.group == 0 and o.label == 0]
    cell = vowel.subset(rows)
    assert len(cell) == 6
    out = transform_contextual(fit_context_estimator(cell, "group-stats"), cell)
    Z = out.columns(P)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-9)
    np.testing.assert_allclose(Z.std(axis=0, ddof=1), 1, atol=1e-9)


def test_linear_exact():
    c = np.array([0.0, 1.0, 2.0, 4.0, 5.0])
    est = fit_context_estimator(with_context((2 * c + 1)[:, None], c), "linear-regress")
    mu, sd = est.query([3.0])
    assert mu[0] == pytest.approx(7.0, abs=1e-10)
    assert sd[0] == SIGMA_FLOOR


def test_linear_singular_falls_back_to_intercept():
    c = np.ones(6)
    with pytest.warns(RuntimeWarning):
        est = fit_context_estimator(with_context(np.arange(6.0)[:, None], c), "linear-regress")
    assert est.intercept_only
    assert est.query([1.0])[0][0] == pytest.approx(2.5)


def test_linear_insufficient_rows():
    with pytest.raises(NormalizationError):
        fit_context_estimator(with_context(np.ones((3, 1)), np.ones((3, 2))), "linear-regress")


def test_knn_uses_baseline_rows_only():
    X = np.array([[0.0], [1.0], [2.0], [3.0], [100.0]])
    ds = with_context(X, [0, 1, 2, 3, 4], baseline=[True, True, True, True, False])
    est = fit_context_estimator(ds, "knn-regress", k=2)
    mu, _ = est.query([0.1])
    assert mu[0] == 0.5


def test_knn_all_rows_equals_baseline_avgdev():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(25, 4))
    ds = with_context(X, rng.uniform(size=(25, 2)), baseline=rng.random(25) < 0.6)
    n_base = int(ds.baseline.sum())
    knn = fit_context_estimator(ds, "knn-regress", k=n_base)
    avg = fit_plain(ds, "baseline-avgdev")
    out_knn = transform_contextual(knn, ds).columns(P)
    out_avg = transform_plain(avg, ds).columns(P)
    np.testing.assert_array_equal(out_knn, out_avg)


def test_estimator_records_round_trip():
    rng = np.random.default_rng(0)
    ds = with_context(rng.normal(size=(12, 3)), rng.normal(size=(12, 2)))
    for kind in ("knn-regress", "linear-regress"):
        est = fit_context_estimator(ds, kind, k=4)
        back = estimator_from_record(json.loads(json.dumps(est.to_record())))
        q = rng.normal(size=(5, 2))
        for a, b in zip(est.query_many(q), back.query_many(q)):
            np.testing.assert_array_equal(a, b)


# --- properties ---

finite = st.floats(-1e3, 1e3)


@given(arrays(float, st.integers(1, 8), elements=finite))
def test_identity_when_unit_stats(x):
    est = GroupStatsEstimator(("f",) * len(x), {0: (np.zeros(len(x)), np.ones(len(x)))})
    np.testing.assert_array_equal(contextual_normalize(est, x, 0), x)


@given(
    st.integers(1, 6).flatmap(
        lambda m: st.tuples(
            arrays(float, m, elements=finite),
            arrays(float, m, elements=finite),
            arrays(float, m, elements=st.floats(1e-3, 1e3)),
        )
    )
)
def test_invertible(args):
    x, mu, sd = args
    est = GroupStatsEstimator(("f",) * len(x), {0: (mu, sd)})
    back = denormalize(est, contextual_normalize(est, x, 0), 0)
    np.testing.assert_allclose(back, x, rtol=1e-9, atol=1e-9 * np.max(np.abs(mu) + 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 4))
def test_group_stats_zero_mean_unit_std(seed, n_groups, m):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, 8, size=n_groups)
    groups = np.repeat(np.arange(n_groups), sizes)
    X = rng.normal(size=(len(groups), m)) * rng.uniform(0.1, 10, size=m) + rng.normal(size=m) * 50
    schema = FeatureSchema(tuple(f"x{i}" for i in range(m)), (P,) * m, (0,))
    ds = Dataset.from_arrays(schema, X, [0] * len(X), groups.tolist())
    Z = transform_contextual(fit_context_estimator(ds, "group-stats"), ds).X
    for g in range(n_groups):
        np.testing.assert_allclose(Z[groups == g].mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(Z[groups == g].std(axis=0, ddof=1), 1, atol=1e-9)


@given(arrays(float, st.integers(1, 40), elements=finite), st.lists(finite, min_size=2, max_size=20))
def test_percentile_range_and_monotone(ref, queries):
    model = fit_plain(one_feature(ref), "percentile")
    qs = np.sort(np.array(queries))
    out = apply_plain(model, qs[:, None])[:, 0]
    assert np.all((out >= 0) & (out <= 1))
    assert np.all(np.diff(out) >= 0)


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 4))
def test_linear_reproduces_exact_linear_data(seed, d, m):
    rng = np.random.default_rng(seed)
    Cx = rng.uniform(-3, 3, size=(d + 6, d))
    B = rng.normal(size=(d, m))
    a = rng.normal(size=m)
    est = fit_context_estimator(with_context(Cx @ B + a, Cx), "linear-regress")
    q = rng.uniform(-3, 3, size=(4, d))
    mu, _ = est.query_many(q)
    np.testing.assert_allclose(mu, q @ B + a, atol=1e-8)
    assert isinstance(est, LinearContextEstimator)
