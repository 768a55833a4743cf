"""Monte Carlo calibration of rejection thresholds and the critical-value cache.

Thresholds are empirical (1-alpha) quantiles of the null distribution of a
statistic, using the conservative ceil-rank order statistic.  The max test
additionally has an exact closed-form threshold from the Sidak correction.
Calibrated thresholds are stored in a CriticalValueTable keyed by the full
tuple (test, n, alpha, reps, seed), and can be persisted to a versioned
line-oriented cache file.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import os
import time
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy import special

from . import stats
from .families import CALIBRATION_STREAM, sample_null

__all__ = [
    "TestKind",
    "CriticalValueTable",
    "UncalibratedError",
    "CacheFormatError",
    "sidak_max_threshold",
    "calibrate",
    "calibrate_tests",
    "test_statistic",
    "reject",
]

GENERATOR_ID = "numpy-pcg64"
CACHE_MAGIC = "sparsedetect-critical-values"
CACHE_VERSION = 1


class TestKind(str, enum.Enum):
    MAX = "max"
    HC = "hc"
    MHC = "mhc"
    BJ = "bj"
    CHISQ = "chisq"
    HYBRID = "hybrid"


# the five scalar-statistic tests (hybrid is a decision rule over two of them)
SCALAR_TESTS = (TestKind.MAX, TestKind.HC, TestKind.MHC, TestKind.BJ, TestKind.CHISQ)


class UncalibratedError(LookupError):
    """Raised when a needed threshold is absent from the table."""


class CacheFormatError(ValueError):
    """Raised for corrupt or version-mismatched cache files."""


def sidak_max_threshold(n: int, alpha: float) -> float:
    """Exact max-|X| threshold: under the null P(max |X_i| > c) = alpha.

    The per-coordinate two-sided level is 1 - (1-alpha)^(1/n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    # per-coordinate level, computed in log space for large n
    a = -math.expm1(math.log1p(-alpha) / n)
    return float(-special.ndtri(a / 2.0))


def test_statistic(test: TestKind, x) -> float:
    """Scalar statistic for a non-hybrid test."""
    test = TestKind(test)
    if test is TestKind.MAX:
        return stats.stat_max(x)
    if test is TestKind.CHISQ:
        return stats.stat_chisq(x)
    p = stats.pvalues(x)
    if test is TestKind.HC:
        return stats.stat_hc(p)
    if test is TestKind.MHC:
        return stats.stat_mhc(p)
    if test is TestKind.BJ:
        return stats.stat_bj(p)
    raise ValueError("hybrid is a decision rule, not a scalar statistic")


def _null_stat_chunk(tests: Sequence[TestKind], n: int, reps: Sequence[int], seed: int) -> np.ndarray:
    """Statistics for a chunk of replicate indices; shape (len(reps), len(tests))."""
    rank_based = any(t in (TestKind.HC, TestKind.MHC, TestKind.BJ) for t in tests)
    out = np.empty((len(reps), len(tests)))
    for row, rep in enumerate(reps):
        x = sample_null(n, [seed, CALIBRATION_STREAM, rep])
        p = stats.pvalues(x) if rank_based else None
        for col, t in enumerate(tests):
            if t is TestKind.MAX:
                out[row, col] = stats.stat_max(x)
            elif t is TestKind.CHISQ:
                out[row, col] = stats.stat_chisq(x)
            elif t is TestKind.HC:
                out[row, col] = stats.stat_hc(p)
            elif t is TestKind.MHC:
                out[row, col] = stats.stat_mhc(p)
            else:
                out[row, col] = stats.stat_bj(p)
    return out


def null_statistics(
    tests: Sequence[TestKind], n: int, reps: int, seed: int, n_jobs: int = 1
) -> np.ndarray:
    """Null-statistic matrix (reps, len(tests)) with per-replicate seed streams.

    Replicate r always uses the stream (seed, r) regardless of chunking, so
    the result is bitwise independent of n_jobs.
    """
    tests = [TestKind(t) for t in tests]
    for t in tests:
        if t is TestKind.HYBRID:
            raise ValueError("hybrid is calibrated componentwise at alpha/2")
    if n_jobs <= 1:
        return _null_stat_chunk(tests, n, range(reps), seed)
    chunks = np.array_split(np.arange(reps), 4 * n_jobs)
    parts = Parallel(n_jobs=n_jobs)(
        delayed(_null_stat_chunk)(tests, n, chunk.tolist(), seed) for chunk in chunks if chunk.size
    )
    return np.vstack(parts)


def empirical_threshold(sorted_stats: np.ndarray, alpha: float) -> float:
    """Order statistic at rank ceil((1-alpha) * reps), the conservative choice."""
    reps = sorted_stats.size
    rank = max(1, math.ceil((1.0 - alpha) * reps))
    return float(sorted_stats[rank - 1])


@dataclasses.dataclass
class CriticalValueTable:
    """Cache of calibrated thresholds keyed by (test, n, alpha, reps, seed)."""

    entries: Dict[Tuple[str, int, float, int, int], float] = dataclasses.field(default_factory=dict)
    generator: str = GENERATOR_ID
    created: float = dataclasses.field(default_factory=time.time)

    @staticmethod
    def _key(test: TestKind, n: int, alpha: float, reps: int, seed: int):
        return (TestKind(test).value, int(n), float(alpha), int(reps), int(seed))

    def put(self, test: TestKind, n: int, alpha: float, reps: int, seed: int, threshold: float):
        self.entries[self._key(test, n, alpha, reps, seed)] = float(threshold)

    def get(self, test: TestKind, n: int, alpha: float, reps: int, seed: int) -> float:
        key = self._key(test, n, alpha, reps, seed)
        if key not in self.entries:
            raise UncalibratedError(f"no threshold for {key}; run calibration first")
        return self.entries[key]

    def threshold(self, test: TestKind, n: int, alpha: float) -> float:
        """Threshold for (test, n, alpha), any replication key.

        If several calibrations match, the one with the most replicates
        (ties: largest seed) wins, deterministically.
        """
        test = TestKind(test).value
        matches = [
            (k[3], k[4], v)
            for k, v in self.entries.items()
            if k[0] == test and k[1] == int(n) and k[2] == float(alpha)
        ]
        if not matches:
            raise UncalibratedError(
                f"no threshold for test={test} n={n} alpha={alpha}; run calibration first"
            )
        return max(matches)[2]

    # -- persistence -------------------------------------------------------

    def save(self, path: str | os.PathLike):
        lines = [f"# {CACHE_MAGIC} v{CACHE_VERSION}\n"]
        for key in sorted(self.entries):
            test, n, alpha, reps, seed = key
            thr = self.entries[key]
            lines.append(f"{test} {n} {alpha:.17g} {reps} {seed} {thr:.17g} {self.generator}\n")
        with open(path, "w") as fh:
            fh.writelines(lines)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "CriticalValueTable":
        with open(path) as fh:
            lines = fh.readlines()
        if not lines or lines[0].strip() != f"# {CACHE_MAGIC} v{CACHE_VERSION}":
            raise CacheFormatError(f"unrecognized cache header in {path}")
        entries: Dict[Tuple[str, int, float, int, int], float] = {}
        generator = GENERATOR_ID
        for ln in lines[1:]:
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split()
            if len(parts) != 7:
                raise CacheFormatError(f"malformed cache record: {ln!r}")
            try:
                test = TestKind(parts[0]).value
                key = (test, int(parts[1]), float(parts[2]), int(parts[3]), int(parts[4]))
                entries[key] = float(parts[5])
            except ValueError as exc:
                raise CacheFormatError(f"malformed cache record: {ln!r}") from exc
            generator = parts[6]
        return cls(entries=entries, generator=generator)


def calibrate_tests(
    tests: Sequence[TestKind],
    n: int,
    alphas: Sequence[float],
    reps: int,
    seed: int,
    table: Optional[CriticalValueTable] = None,
    n_jobs: int = 1,
) -> Dict[Tuple[TestKind, float], float]:
    """Calibrate several tests / levels from one shared set of null draws.

    Results are identical to per-test calibrate() calls with the same key,
    since replicate streams depend only on (seed, replicate index).
    """
    tests = [TestKind(t) for t in tests]
    alphas = [float(a) for a in alphas]
    for a in alphas:
        if not 0.0 < a <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {a}")
    if reps < 100:
        raise ValueError("need at least 100 calibration replicates")
    mat = null_statistics(tests, n, reps, seed, n_jobs=n_jobs)
    mat.sort(axis=0)
    out: Dict[Tuple[TestKind, float], float] = {}
    for col, t in enumerate(tests):
        for a in alphas:
            thr = empirical_threshold(mat[:, col], a)
            out[(t, a)] = thr
            if table is not None:
                table.put(t, n, a, reps, seed, thr)
    return out


def calibrate(
    test: TestKind,
    n: int,
    alpha: float,
    reps: int,
    seed: int,
    table: Optional[CriticalValueTable] = None,
    n_jobs: int = 1,
) -> float:
    """Empirical (1-alpha) null quantile of one statistic; deterministic per key."""
    res = calibrate_tests([test], n, [alpha], reps, seed, table=table, n_jobs=n_jobs)
    return res[(TestKind(test), float(alpha))]


def reject(test: TestKind, x, table: CriticalValueTable, alpha: float) -> bool:
    """Apply a calibrated test; strict inequality at the threshold.

    Raises UncalibratedError if the needed thresholds are absent (for the
    hybrid test: max and chi-square thresholds at alpha/2).
    """
    test = TestKind(test)
    x = np.asarray(x, dtype=float)
    n = x.size
    if test is TestKind.HYBRID:
        m_half = table.threshold(TestKind.MAX, n, alpha / 2.0)
        c_half = table.threshold(TestKind.CHISQ, n, alpha / 2.0)
        return stats.hybrid_reject(x, m_half, c_half)
    thr = table.threshold(test, n, alpha)
    return test_statistic(test, x) > thr
