"""Tests for the sklearn-style estimator wrapper."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sparsedetect.estimator import GlobalNullTest


def make_data(n_rows=6, n_cols=50, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_rows, n_cols))
    X[0, :3] += 10.0  # one clearly non-null row
    return X


class TestGlobalNullTest:
    def test_fit_predict(self):
        X = make_data()
        est = GlobalNullTest(test="max", calib_reps=2000, seed=1)
        est.fit(X)
        assert est.n_features_in_ == 50
        pred = est.predict(X)
        assert pred.dtype == bool and pred.shape == (6,)
        assert pred[0]  # the spiked row is rejected
        assert pred[1:].sum() <= 1  # null rows mostly accepted

    def test_decision_function_sign_matches_predict(self):
        X = make_data()
        est = GlobalNullTest(test="bj", calib_reps=1000).fit(X)
        margins = est.decision_function(X)
        np.testing.assert_array_equal(margins > 0, est.predict(X))

    def test_hybrid(self):
        X = make_data()
        est = GlobalNullTest(test="hybrid", calib_reps=1000).fit(X)
        assert set(est.thresholds_) == {"max", "chisq"}
        assert est.predict(X)[0]

    def test_unfitted(self):
        with pytest.raises(NotFittedError):
            GlobalNullTest().predict(make_data())

    def test_feature_mismatch(self):
        est = GlobalNullTest(calib_reps=500).fit(make_data(n_cols=20))
        with pytest.raises(ValueError):
            est.predict(np.zeros((2, 21)))

    def test_clone_roundtrip(self):
        est = GlobalNullTest(test="mhc", alpha=0.01, calib_reps=1234, seed=9, n_jobs=2)
        params = clone(est).get_params()
        assert params == {
            "test": "mhc",
            "alpha": 0.01,
            "calib_reps": 1234,
            "seed": 9,
            "n_jobs": 2,
        }

    def test_deterministic(self):
        X = make_data()
        a = GlobalNullTest(calib_reps=500, seed=3).fit(X).thresholds_
        b = GlobalNullTest(calib_reps=500, seed=3).fit(X).thresholds_
        assert a == b
