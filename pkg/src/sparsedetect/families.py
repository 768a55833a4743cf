"""Non-null signal families, scale rules and data generation.

The data model is a sparse Gaussian sequence: ``X_i ~ N(mu_i, 1)`` where a
small fraction ``n**(-beta)`` of the means is drawn from a scale family
``sigma_n * theta`` with ``theta`` following one of the standardized
families below, and the rest are zero.  Only the signal means vary between
families; the noise is always standard normal.
"""

from __future__ import annotations

import dataclasses
import enum
import functools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats as sps

__all__ = [
    "Family",
    "GFamily",
    "FixedScale",
    "RootLogScale",
    "InverseRootLogScale",
    "PolynomialDecayScale",
    "PowerScale",
    "ScaleRule",
    "SampleMode",
    "AlternativeModel",
    "sigma_n",
    "g_tail",
    "sample_null",
    "sample_alternative",
    "stream",
    "NULL_STREAM",
    "ALT_STREAM",
    "CALIBRATION_STREAM",
    "POWER_STREAM",
]

SeedLike = Union[int, Sequence[int], np.random.Generator]

# Stream-domain tags.  Generators are derived from (seed, domain, *key) so
# that calibration draws, power draws and plain sampling never share a
# stream, and parallel replicates are order-independent.
NULL_STREAM = 0
ALT_STREAM = 1
CALIBRATION_STREAM = 2
POWER_STREAM = 3


def stream(seed: SeedLike, *key: int) -> np.random.Generator:
    """Independent generator for (seed, *key); pass-through for Generators."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (int, np.integer)):
        entropy = [int(seed), *key]
    else:
        entropy = [*(int(s) for s in seed), *key]
    return np.random.default_rng(entropy)


class Family(str, enum.Enum):
    """Supported distributions for the standardized non-null means."""

    POINT_MASS = "point-mass"
    GAUSSIAN = "gaussian"
    LAPLACE = "laplace"
    CAUCHY = "cauchy"
    STUDENT_T = "student-t"
    LOGISTIC = "logistic"
    CHI_SQUARED_1 = "chi1"


# scipy frozen distribution per family (None -> handled specially)
@functools.lru_cache(maxsize=None)
def _frozen(kind: Family, nu: Optional[float]):
    if kind is Family.GAUSSIAN:
        return sps.norm()
    if kind is Family.LAPLACE:
        return sps.laplace()
    if kind is Family.CAUCHY:
        return sps.cauchy()
    if kind is Family.STUDENT_T:
        return sps.t(df=nu)
    if kind is Family.LOGISTIC:
        return sps.logistic()
    if kind is Family.CHI_SQUARED_1:
        return sps.chi2(df=1)
    return None


@dataclass(frozen=True)
class GFamily:
    """A standardized signal-mean distribution.

    ``nu`` is the Student-t degrees of freedom and is only accepted for
    ``Family.STUDENT_T`` (the Cauchy is the fixed nu=1 special case and
    takes no parameter).
    """

    kind: Family
    nu: Optional[float] = None

    def __post_init__(self):
        if self.kind is Family.STUDENT_T:
            if self.nu is None or not self.nu > 0:
                raise ValueError("student-t requires nu > 0")
        elif self.nu is not None:
            raise ValueError(f"{self.kind.value} does not take a nu parameter")

    @property
    def symmetric(self) -> bool:
        return self.kind not in (Family.POINT_MASS, Family.CHI_SQUARED_1)

    def cdf(self, theta):
        if self.kind is Family.POINT_MASS:
            return np.where(np.asarray(theta, dtype=float) >= 1.0, 1.0, 0.0)
        return _frozen(self.kind, self.nu).cdf(theta)

    def sf(self, theta):
        """Upper tail P(theta' > theta) of the standardized family."""
        if self.kind is Family.POINT_MASS:
            return np.where(np.asarray(theta, dtype=float) < 1.0, 1.0, 0.0)
        return _frozen(self.kind, self.nu).sf(theta)

    def pdf(self, theta):
        if self.kind is Family.POINT_MASS:
            raise ValueError("point mass has no density")
        return _frozen(self.kind, self.nu).pdf(theta)

    def log_tail_max(self, theta):
        """max(log P(theta' > t), log P(theta' < -t)), the two-sided log tail.

        This is -Q(t) in the tail-exponent computations.  For symmetric
        families both branches coincide at t >= 0; for the chi-square
        family the lower branch is -inf.
        """
        if self.kind is Family.POINT_MASS:
            with np.errstate(divide="ignore"):
                return np.log(self.sf(theta))
        d = _frozen(self.kind, self.nu)
        return np.maximum(d.logsf(theta), d.logcdf(-np.asarray(theta, dtype=float)))

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind is Family.POINT_MASS:
            return np.ones(size)
        if self.kind is Family.GAUSSIAN:
            return rng.standard_normal(size)
        if self.kind is Family.LAPLACE:
            return rng.laplace(0.0, 1.0, size)
        if self.kind is Family.CAUCHY:
            return rng.standard_cauchy(size)
        if self.kind is Family.STUDENT_T:
            return rng.standard_t(self.nu, size)
        if self.kind is Family.LOGISTIC:
            return rng.logistic(0.0, 1.0, size)
        if self.kind is Family.CHI_SQUARED_1:
            return rng.standard_normal(size) ** 2
        raise ValueError(self.kind)  # pragma: no cover


def g_tail(family: GFamily, theta: float):
    """P(mu/sigma > theta) for the standardized family."""
    return family.sf(theta)


# ---------------------------------------------------------------------------
# Scale rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedScale:
    """sigma_n = r, constant in n."""

    r: float

    def sigma(self, n: int) -> float:
        return self.r


@dataclass(frozen=True)
class RootLogScale:
    """sigma_n = sqrt(2 r log n), the point-mass calibration.

    Note this is the sqrt(2 r log n) convention, not r sqrt(log n); the two
    appear interchangeably in the literature and differ by a reparametrization
    of r.
    """

    r: float

    def sigma(self, n: int) -> float:
        return math.sqrt(2.0 * self.r * math.log(n))


@dataclass(frozen=True)
class InverseRootLogScale:
    """sigma_n = r / sqrt(2 log n), the exponential-tail calibration."""

    r: float

    def sigma(self, n: int) -> float:
        return self.r / math.sqrt(2.0 * math.log(n))


@dataclass(frozen=True)
class PolynomialDecayScale:
    """sigma_n = r sqrt(2 log n) / n**((1-beta)/nu), the polynomial-tail
    critical scaling."""

    r: float
    beta: float
    nu: float

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not self.nu > 0:
            raise ValueError("nu must be positive")

    def sigma(self, n: int) -> float:
        return self.r * math.sqrt(2.0 * math.log(n)) / n ** ((1.0 - self.beta) / self.nu)


@dataclass(frozen=True)
class PowerScale:
    """sigma_n = n**rho."""

    rho: float

    def sigma(self, n: int) -> float:
        return float(n) ** self.rho


ScaleRule = Union[FixedScale, RootLogScale, InverseRootLogScale, PolynomialDecayScale, PowerScale]


def sigma_n(scale: ScaleRule, n: int) -> float:
    """Evaluate the scale rule at dimension n (requires n >= 2)."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    s = scale.sigma(int(n))
    if not s > 0:
        raise ValueError(f"scale rule produced non-positive sigma: {s}")
    return float(s)


def rescaled(scale: ScaleRule, r: float, beta: Optional[float] = None) -> ScaleRule:
    """Copy of a scale rule with its r (and, where present, beta) replaced.

    Used by experiment grids where a template rule is swept over r values.
    PowerScale has no r parameter and cannot be used as a grid template.
    """
    if isinstance(scale, PowerScale):
        raise ValueError("PowerScale has no r parameter to sweep")
    if isinstance(scale, PolynomialDecayScale) and beta is not None:
        return dataclasses.replace(scale, r=r, beta=beta)
    return dataclasses.replace(scale, r=r)


# ---------------------------------------------------------------------------
# Alternative model and sampling
# ---------------------------------------------------------------------------


class SampleMode(str, enum.Enum):
    # RandomCount: Bernoulli(n^-beta) non-null indicators (the mixture model);
    # FixedCount: exactly floor(n^(1-beta)) non-nulls (the simulation design).
    RANDOM_COUNT = "random-count"
    FIXED_COUNT = "fixed-count"


@dataclass(frozen=True)
class AlternativeModel:
    """Full specification of a sparse mixture alternative."""

    n: int
    beta: float
    family: GFamily
    scale: ScaleRule
    mode: SampleMode = SampleMode.FIXED_COUNT

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")

    @property
    def n1(self) -> int:
        """Non-null count floor(n**(1-beta)) used in fixed-count mode."""
        return int(math.floor(self.n ** (1.0 - self.beta)))

    @property
    def pi_n(self) -> float:
        return self.n ** (-self.beta)

    def sigma(self) -> float:
        return sigma_n(self.scale, self.n)


def sample_null(n: int, seed: SeedLike) -> np.ndarray:
    """i.i.d. standard normal vector of length n, reproducible under seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = stream(seed, NULL_STREAM)
    return rng.standard_normal(n)


def sample_alternative(model: AlternativeModel, seed: SeedLike) -> np.ndarray:
    """Draw one data vector under the mixture alternative.

    Fixed-count mode places the non-null means at the leading coordinates;
    all tests under study are permutation invariant, so positions carry no
    information.
    """
    rng = stream(seed, ALT_STREAM)
    x = rng.standard_normal(model.n)
    sig = model.sigma()
    if model.mode is SampleMode.FIXED_COUNT:
        k = model.n1
    else:
        k = int(rng.binomial(model.n, model.pi_n))
    if k > 0:
        x[:k] += sig * model.family.draw(rng, k)
    return x
