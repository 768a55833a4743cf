"""Tests for Monte Carlo calibration, the Sidak threshold and the cache."""

import numpy as np
import pytest

from sparsedetect.calibration import (
    CacheFormatError,
    CriticalValueTable,
    TestKind,
    UncalibratedError,
    calibrate,
    calibrate_tests,
    empirical_threshold,
    null_statistics,
    reject,
    sidak_max_threshold,
)
from sparsedetect.calibration import test_statistic as statistic_of

QUANTILE_ATOL = 1e-9
# standard normal quantile oracles
Z_975 = 1.959963984540054
Z_75 = 0.6744897501960817
CHI2_1_Q95 = 3.841458820694124


class TestSidakThreshold:
    def test_single_coordinate(self):
        assert sidak_max_threshold(1, 0.05) == pytest.approx(Z_975, abs=QUANTILE_ATOL)
        assert sidak_max_threshold(1, 0.5) == pytest.approx(Z_75, abs=QUANTILE_ATOL)

    def test_grows_with_n(self):
        assert sidak_max_threshold(10 ** 6, 0.05) > sidak_max_threshold(10, 0.05)

    def test_exactness_via_mc(self):
        # P(max |X_i| > c) should be alpha: check the empirical rate
        thr = sidak_max_threshold(50, 0.1)
        rng = np.random.default_rng(0)
        hits = np.mean(np.max(np.abs(rng.standard_normal((20000, 50))), axis=1) > thr)
        assert abs(hits - 0.1) < 0.01

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            sidak_max_threshold(10, 0.0)
        with pytest.raises(ValueError):
            sidak_max_threshold(10, 1.0)
        with pytest.raises(ValueError):
            sidak_max_threshold(0, 0.05)


class TestEmpiricalThreshold:
    def test_rank_convention(self):
        stats = np.arange(1.0, 101.0)  # already sorted
        # rank ceil(0.95 * 100) = 95 -> value 95
        assert empirical_threshold(stats, 0.05) == 95.0
        assert empirical_threshold(stats, 0.5) == 50.0

    def test_alpha_one_degenerates_to_minimum(self):
        stats = np.array([3.0, 5.0, 9.0])
        assert empirical_threshold(stats, 1.0) == 3.0


class TestCalibrate:
    def test_chisq_single_coordinate_quantile(self):
        thr = calibrate(TestKind.CHISQ, 1, 0.05, 100_000, seed=0)
        assert thr == pytest.approx(CHI2_1_Q95, abs=0.1)

    def test_max_approaches_sidak(self):
        thr = calibrate(TestKind.MAX, 100, 0.05, 20_000, seed=1)
        assert abs(thr - sidak_max_threshold(100, 0.05)) < 0.05

    def test_bitwise_deterministic(self):
        a = calibrate(TestKind.HC, 50, 0.05, 500, seed=3)
        b = calibrate(TestKind.HC, 50, 0.05, 500, seed=3)
        assert a == b

    def test_joint_equals_individual(self):
        joint = calibrate_tests(
            [TestKind.MAX, TestKind.BJ], 40, [0.05, 0.1], 500, seed=2
        )
        assert joint[(TestKind.MAX, 0.05)] == calibrate(TestKind.MAX, 40, 0.05, 500, seed=2)
        assert joint[(TestKind.BJ, 0.1)] == calibrate(TestKind.BJ, 40, 0.1, 500, seed=2)

    def test_threshold_nonincreasing_in_alpha(self):
        res = calibrate_tests([TestKind.MHC], 30, [0.01, 0.05, 0.2, 0.5], 2000, seed=0)
        values = [res[(TestKind.MHC, a)] for a in (0.01, 0.05, 0.2, 0.5)]
        assert values == sorted(values, reverse=True)

    def test_njobs_invariance(self):
        serial = null_statistics([TestKind.MAX, TestKind.HC], 30, 200, seed=5, n_jobs=1)
        parallel = null_statistics([TestKind.MAX, TestKind.HC], 30, 200, seed=5, n_jobs=2)
        np.testing.assert_array_equal(serial, parallel)

    def test_hybrid_rejected(self):
        with pytest.raises(ValueError):
            calibrate(TestKind.HYBRID, 10, 0.05, 500, seed=0)

    def test_too_few_reps(self):
        with pytest.raises(ValueError):
            calibrate(TestKind.MAX, 10, 0.05, 99, seed=0)

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            calibrate(TestKind.MAX, 10, 0.0, 500, seed=0)


class TestCriticalValueTable:
    def test_put_get(self):
        t = CriticalValueTable()
        t.put(TestKind.MAX, 100, 0.05, 1000, 0, 3.5)
        assert t.get(TestKind.MAX, 100, 0.05, 1000, 0) == 3.5
        with pytest.raises(UncalibratedError):
            t.get(TestKind.MAX, 100, 0.05, 1000, 1)

    def test_threshold_prefers_more_reps(self):
        t = CriticalValueTable()
        t.put(TestKind.MAX, 100, 0.05, 1000, 0, 3.5)
        t.put(TestKind.MAX, 100, 0.05, 5000, 0, 3.6)
        assert t.threshold(TestKind.MAX, 100, 0.05) == 3.6
        with pytest.raises(UncalibratedError):
            t.threshold(TestKind.MAX, 200, 0.05)

    def test_roundtrip(self, tmp_path):
        t = CriticalValueTable()
        t.put(TestKind.BJ, 1000, 0.025, 20000, 7, 3.141592653589793)
        t.put(TestKind.MAX, 50, 0.05, 500, 0, 2.999999999999999)
        path = tmp_path / "cache.txt"
        t.save(path)
        loaded = CriticalValueTable.load(path)
        assert loaded.entries == t.entries
        assert loaded.generator == t.generator

    def test_bad_header(self, tmp_path):
        path = tmp_path / "cache.txt"
        path.write_text("# some-other-format v9\nmax 10 0.05 100 0 1.0 gen\n")
        with pytest.raises(CacheFormatError):
            CriticalValueTable.load(path)

    def test_malformed_record(self, tmp_path):
        path = tmp_path / "cache.txt"
        path.write_text(
            "# sparsedetect-critical-values v1\nmax 10 0.05 not-a-number 0 1.0 gen\n"
        )
        with pytest.raises(CacheFormatError):
            CriticalValueTable.load(path)

    def test_unknown_test_kind(self, tmp_path):
        path = tmp_path / "cache.txt"
        path.write_text("# sparsedetect-critical-values v1\nwilcoxon 10 0.05 100 0 1.0 gen\n")
        with pytest.raises(CacheFormatError):
            CriticalValueTable.load(path)


class TestReject:
    def _table(self, n=4):
        t = CriticalValueTable()
        t.put(TestKind.MAX, n, 0.05, 1000, 0, 3.0)
        t.put(TestKind.MAX, n, 0.025, 1000, 0, 3.3)
        t.put(TestKind.CHISQ, n, 0.025, 1000, 0, 12.0)
        return t

    def test_strict_inequality(self):
        t = self._table()
        x = np.array([3.0, 0.0, 0.0, 0.0])  # statistic exactly at threshold
        assert not reject(TestKind.MAX, x, t, 0.05)
        assert reject(TestKind.MAX, np.array([3.0000001, 0, 0, 0]), t, 0.05)

    def test_hybrid_paths(self):
        t = self._table()
        assert not reject(TestKind.HYBRID, np.array([1.0, 1.0, 1.0, 1.0]), t, 0.05)
        assert reject(TestKind.HYBRID, np.array([4.0, 0.0, 0.0, 0.0]), t, 0.05)
        assert reject(TestKind.HYBRID, np.array([2.0, 2.0, 2.0, 2.0]), t, 0.05)

    def test_uncalibrated_error(self):
        t = CriticalValueTable()
        with pytest.raises(UncalibratedError):
            reject(TestKind.MAX, np.zeros(4), t, 0.05)
        # hybrid needs both component thresholds at alpha/2
        t.put(TestKind.MAX, 4, 0.025, 1000, 0, 3.3)
        with pytest.raises(UncalibratedError):
            reject(TestKind.HYBRID, np.zeros(4), t, 0.05)

    def test_statistic_dispatch(self):
        x = np.array([1.0, -2.0])
        assert statistic_of(TestKind.MAX, x) == 2.0
        assert statistic_of(TestKind.CHISQ, x) == pytest.approx(5.0, abs=1e-12)
        assert statistic_of(TestKind.HC, x) >= 0.0
        with pytest.raises(ValueError):
            statistic_of(TestKind.HYBRID, x)
