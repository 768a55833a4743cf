"""Scikit-learn style wrapper around calibration + rejection.

Fitting Monte Carlo calibrates the null thresholds for the row length of
the training data; prediction applies the calibrated test to each row.
This lets the global-null tests participate in sklearn pipelines and
grid-search over their hyperparameters.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .calibration import CriticalValueTable, TestKind, calibrate_tests, test_statistic
from .stats import stat_chisq, stat_max

__all__ = ["GlobalNullTest"]


class GlobalNullTest(BaseEstimator):
    """Tests, row by row, whether all coordinate means are zero.

    Parameters
    ----------
    test : str, one of "max", "hc", "mhc", "bj", "chisq", "hybrid"
    alpha : float, familywise level of the test
    calib_reps : int, Monte Carlo replicates for null calibration
    seed : int, seed of the calibration stream
    n_jobs : int, worker count for calibration

    After ``fit``, ``predict(X)`` returns a boolean rejection per row and
    ``decision_function(X)`` the margin statistic - threshold (for the
    hybrid, the larger of its two component margins).
    """

    def __init__(self, test="max", alpha=0.05, calib_reps=20000, seed=0, n_jobs=1):
        self.test = test
        self.alpha = alpha
        self.calib_reps = calib_reps
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=True)
        kind = TestKind(self.test)
        self.n_features_in_ = X.shape[1]
        self.table_ = CriticalValueTable()
        if kind is TestKind.HYBRID:
            tests, alpha = [TestKind.MAX, TestKind.CHISQ], self.alpha / 2.0
        else:
            tests, alpha = [kind], float(self.alpha)
        thr = calibrate_tests(
            tests,
            self.n_features_in_,
            [alpha],
            self.calib_reps,
            self.seed,
            table=self.table_,
            n_jobs=self.n_jobs,
        )
        self.thresholds_ = {t.value: v for (t, _), v in thr.items()}
        return self

    def _margins(self, X) -> np.ndarray:
        check_is_fitted(self, "thresholds_")
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, calibrated for {self.n_features_in_}"
            )
        kind = TestKind(self.test)
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            if kind is TestKind.HYBRID:
                out[i] = max(
                    stat_max(row) - self.thresholds_[TestKind.MAX.value],
                    stat_chisq(row) - self.thresholds_[TestKind.CHISQ.value],
                )
            else:
                out[i] = test_statistic(kind, row) - self.thresholds_[kind.value]
        return out

    def decision_function(self, X) -> np.ndarray:
        return self._margins(X)

    def predict(self, X) -> np.ndarray:
        """True where the global null is rejected for the row."""
        return self._margins(X) > 0.0
