import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risfingerprint.fingerprint import FingerprintDb
from risfingerprint.localize import (
    EvalReport,
    SplitSpec,
    evaluate,
    knn_predict,
    knn_predict_many,
    rmse_2d,
    split,
)


def grid_db(n=50, m=4, seed=0):
    rng = np.random.default_rng(seed)
    pos = np.column_stack([rng.uniform(0, 10, n), rng.uniform(0, 10, n), np.ones(n)])
    return FingerprintDb(pos, rng.normal(-60, 10, (n, m)))


def test_split_sizes_and_partition():
    db = FingerprintDb(np.zeros((2500, 3)) + np.arange(2500)[:, None], np.zeros((2500, 1)))
    train, test = split(db, SplitSpec(0.8, 3))
    assert (len(train), len(test)) == (2000, 500)
    ids = np.concatenate([train.positions[:, 0], test.positions[:, 0]])
    assert sorted(ids) == list(range(2500))
    again, _ = split(db, SplitSpec(0.8, 3))
    np.testing.assert_array_equal(train.positions, again.positions)
    other, _ = split(db, SplitSpec(0.8, 4))
    assert not np.array_equal(train.positions, other.positions)


def test_split_errors():
    with pytest.raises(ValueError):
        split(FingerprintDb(np.zeros((1, 3)), np.zeros((1, 2))), SplitSpec())
    with pytest.raises(ValueError):
        SplitSpec(1.0)


def test_knn_self_query_exact():
    db = grid_db()
    for i in (0, 7, 49):
        np.testing.assert_array_equal(knn_predict(db, db.rss[i], 1), db.positions[i])


def test_knn_equidistant_midpoint():
    db = FingerprintDb([[0, 0, 1], [2, 4, 1], [9, 9, 1]], [[1.0], [3.0], [50.0]])
    np.testing.assert_allclose(knn_predict(db, [2.0], 2), [1, 2, 1])


def test_knn_ties_go_to_lower_index():
    pos = np.column_stack([np.arange(6.0), np.zeros(6), np.ones(6)])
    db = FingerprintDb(pos, np.zeros((6, 2)))
    np.testing.assert_allclose(knn_predict(db, [0, 0], 2), [0.5, 0, 1])
    np.testing.assert_allclose(knn_predict(db, [1, 1], 3), [1, 0, 1])


def test_knn_errors():
    db = grid_db()
    with pytest.raises(ValueError):
        knn_predict(db, db.rss[0], 0)
    with pytest.raises(ValueError):
        knn_predict(db, db.rss[0], 51)
    with pytest.raises(ValueError):
        knn_predict(db, db.rss[0][:2], 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(-100, 100), st.integers(1, 7))
def test_knn_translation_invariant(seed, offset, k):
    db = grid_db(seed=seed)
    q = np.random.default_rng(seed + 1).normal(-60, 10, (5, 4))
    shifted = FingerprintDb(db.positions, db.rss + offset)
    a = knn_predict_many(db, q, k)
    b = knn_predict_many(shifted, q + offset, k)
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_batched_matches_single():
    db = grid_db(300)
    q = np.random.default_rng(9).normal(-60, 10, (260, 4))
    many = knn_predict_many(db, q, 5)
    for i in (0, 127, 128, 259):
        np.testing.assert_allclose(many[i], knn_predict(db, q[i], 5))


def test_rmse_examples():
    truth = np.array([[0, 0, 1.0]])
    assert rmse_2d(truth, truth) == 0
    assert rmse_2d(np.array([[3, 4, 7.0]]), truth) == 5


def test_perfect_predictor_rmse_zero():
    # every test fingerprint also appears in training: K=1 recovers it exactly
    db = grid_db()
    _, test = split(db, SplitSpec(0.8, 0))
    pred = knn_predict_many(db, test.rss, 1)
    assert rmse_2d(pred, test.positions) == 0
    r = EvalReport(0.0, np.zeros(3), np.zeros((3, 3)), np.zeros((3, 3)))
    assert r.cdf()[1][-1] == 1.0 and r.percentile(90) == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 9))
def test_report_invariants(seed, k):
    rep = evaluate(grid_db(80, seed=seed), SplitSpec(0.8, seed), k)
    errs, cdf = rep.cdf()
    assert rep.rmse >= 0
    assert np.all(np.diff(errs) >= 0) and np.all(np.diff(cdf) > 0) and cdf[-1] == 1.0
    assert rep.rmse == pytest.approx(np.sqrt(np.mean(errs**2)))
    again = evaluate(grid_db(80, seed=seed), SplitSpec(0.8, seed), k)
    assert again.rmse == rep.rmse
    d = rep.to_dict()
    assert d["n_test"] == 16 and d["config"]["k"] == k
