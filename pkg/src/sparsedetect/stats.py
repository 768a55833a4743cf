"""Test statistics for the global null.

All rank-based statistics operate on two-sided p-values
``p_i = P(|N(0,1)| >= |x_i|)``.  The higher-criticism statistic is the
supremum of the standardized empirical-process deviation

    sqrt(n) * (F_hat(t) - t) / sqrt(t (1 - t))

over t in (0, 1/2]; the modified variant restricts the range to
[1/n, 1/2].  On each interval between jumps of F_hat the objective is
strictly decreasing for t < 1/2, so both suprema are computed exactly
from the jump points (plus the boundary: the t -> 0 limit contributes 0
for HC, and the left endpoint 1/n for mHC).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

__all__ = [
    "pvalues",
    "stat_max",
    "stat_hc",
    "stat_mhc",
    "stat_bj",
    "stat_chisq",
    "hybrid_reject",
]

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_P_FLOOR = 1e-300  # clamp before ratios; an exact zero is a +inf sentinel


def pvalues(x) -> np.ndarray:
    """Sorted two-sided normal p-values 2 * Phi_bar(|x_i|)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a one-dimensional data vector")
    if np.isnan(x).any():
        raise ValueError("data vector contains NaN")
    p = special.erfc(np.abs(x) * _INV_SQRT2)
    p.sort()
    return p


def stat_max(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("empty data vector")
    return float(np.max(np.abs(x)))


def stat_chisq(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))


def _deviation_terms(n: int, t: np.ndarray, counts: np.ndarray) -> np.ndarray:
    # sqrt(n) * (counts/n - t) / sqrt(t (1-t)) with t clamped away from 0
    pc = np.maximum(t, _P_FLOOR)
    return math.sqrt(n) * (counts / n - t) / np.sqrt(pc * (1.0 - pc))


def stat_hc(p) -> float:
    """Higher criticism: sup over t in (0, 1/2] of the ECDF deviation.

    Expects sorted ascending p-values.  A p-value of exactly zero
    saturates the statistic to +inf.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    if n == 0:
        raise ValueError("empty p-value vector")
    if p[0] <= 0.0:
        return math.inf
    mask = p <= 0.5
    if not mask.any():
        return 0.0  # sup approached at t -> 0+
    cand = p[mask]
    # rank of the last tied value = n * F_hat(p_(i))
    counts = np.searchsorted(p, cand, side="right").astype(float)
    best = float(np.max(_deviation_terms(n, cand, counts)))
    return max(0.0, best)


def stat_mhc(p) -> float:
    """Modified higher criticism: sup over t in [1/n, 1/2]."""
    p = np.asarray(p, dtype=float)
    n = p.size
    if n == 0:
        raise ValueError("empty p-value vector")
    lo = 1.0 / n
    cand = p[(p > lo) & (p <= 0.5)]
    ts = np.concatenate(([lo], cand))
    counts = np.searchsorted(p, ts, side="right").astype(float)
    return float(np.max(_deviation_terms(n, ts, counts)))


def stat_bj(p) -> float:
    """Berk-Jones: max over k <= n/2 of sqrt(2 n KL(k/n || p_(k))).

    The KL term is the signless binary divergence, so both very small and
    very large order statistics inflate the statistic.  p_(k) = 0 (and
    p_(k) = 1, since k/n < 1) saturate to +inf.
    """
    p = np.asarray(p, dtype=float)
    n = p.size
    if n < 2:
        raise ValueError("Berk-Jones needs n >= 2")
    m = n // 2
    pk = p[:m]
    if pk[0] <= 0.0 or pk[-1] >= 1.0:
        return math.inf
    a = np.arange(1, m + 1) / n
    kl = a * (np.log(a) - np.log(pk)) + (1.0 - a) * (np.log1p(-a) - np.log1p(-pk))
    # KL of two Bernoullis; tiny negative values are rounding noise
    best = max(0.0, float(np.max(kl)))
    return math.sqrt(2.0 * n * best)


def hybrid_reject(x, m_half: float, c_half: float) -> bool:
    """Union rejection region: max above m_half OR sum of squares above c_half.

    Both thresholds are calibrated at level alpha/2.
    """
    return stat_max(x) > m_half or stat_chisq(x) > c_half
