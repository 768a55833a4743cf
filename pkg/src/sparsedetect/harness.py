"""Power experiments: grids over (test, beta, r) and figure-reproduction datasets.

A run is fully determined by its ExperimentSpec (including the seed):
calibration replicates and power replicates live in separate stream
domains, cells use (beta index, r index) in their stream key, and all
tests in a cell share the same alternative draws, which both saves work
and removes Monte Carlo noise from cross-test comparisons within a cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .calibration import (
    CriticalValueTable,
    TestKind,
    calibrate_tests,
    SCALAR_TESTS,
)
from .families import (
    POWER_STREAM,
    AlternativeModel,
    Family,
    FixedScale,
    GFamily,
    PolynomialDecayScale,
    SampleMode,
    ScaleRule,
    rescaled,
    sample_alternative,
)
from .stats import pvalues, stat_bj, stat_chisq, stat_hc, stat_max, stat_mhc

__all__ = [
    "ExperimentSpec",
    "PowerEstimate",
    "estimate_power",
    "estimate_power_many",
    "run_grid",
    "reproduce_figure",
    "figure_spec",
    "FIGURE_IDS",
    "write_grid_csv",
]


@dataclass(frozen=True)
class ExperimentSpec:
    n: int
    alpha: float
    tests: Tuple[TestKind, ...]
    betas: Tuple[float, ...]
    r_values: Tuple[float, ...]
    family: GFamily
    scale_rule_template: ScaleRule
    power_reps: int = 1000
    calib_reps: int = 20000
    seed: int = 0
    mode: SampleMode = SampleMode.FIXED_COUNT

    def __post_init__(self):
        object.__setattr__(self, "tests", tuple(TestKind(t) for t in self.tests))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "r_values", tuple(float(r) for r in self.r_values))
        if not self.tests or not self.betas or not self.r_values:
            raise ValueError("tests, betas and r_values must all be non-empty")
        if any(not 0.0 < b < 1.0 for b in self.betas):
            raise ValueError("beta grid must lie in (0, 1)")
        if self.power_reps < 100:
            raise ValueError("need at least 100 power replicates")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass(frozen=True)
class PowerEstimate:
    test: TestKind
    beta: float
    r: float
    power: float
    ci_half_width: float
    reps: int
    seed: int

    @staticmethod
    def from_rejections(test, beta, r, n_reject, reps, seed) -> "PowerEstimate":
        power = n_reject / reps
        # Wald half-width with a 1/reps continuity floor near 0/1
        half = max(1.96 * math.sqrt(power * (1.0 - power) / reps), 1.0 / reps)
        return PowerEstimate(TestKind(test), float(beta), float(r), power, half, reps, seed)


def _thresholds_for(
    tests: Sequence[TestKind], table: CriticalValueTable, n: int, alpha: float
) -> Dict[TestKind, Tuple[float, ...]]:
    """Resolve thresholds; hybrid expands to its (max, chisq) pair at alpha/2."""
    out: Dict[TestKind, Tuple[float, ...]] = {}
    for t in tests:
        t = TestKind(t)
        if t is TestKind.HYBRID:
            out[t] = (
                table.threshold(TestKind.MAX, n, alpha / 2.0),
                table.threshold(TestKind.CHISQ, n, alpha / 2.0),
            )
        else:
            out[t] = (table.threshold(t, n, alpha),)
    return out


def _rejection_chunk(
    tests: Sequence[TestKind],
    thresholds: Dict[TestKind, Tuple[float, ...]],
    model: AlternativeModel,
    reps: Sequence[int],
    stream_key: Tuple[int, ...],
) -> np.ndarray:
    rank_based = any(t in (TestKind.HC, TestKind.MHC, TestKind.BJ) for t in tests)
    counts = np.zeros(len(tests), dtype=np.int64)
    for rep in reps:
        x = sample_alternative(model, [*stream_key, rep])
        p = pvalues(x) if rank_based else None
        mx = sq = None
        for col, t in enumerate(tests):
            if t is TestKind.MAX:
                mx = stat_max(x) if mx is None else mx
                hit = mx > thresholds[t][0]
            elif t is TestKind.CHISQ:
                sq = stat_chisq(x) if sq is None else sq
                hit = sq > thresholds[t][0]
            elif t is TestKind.HYBRID:
                m_half, c_half = thresholds[t]
                mx = stat_max(x) if mx is None else mx
                sq = stat_chisq(x) if sq is None else sq
                hit = mx > m_half or sq > c_half
            elif t is TestKind.HC:
                hit = stat_hc(p) > thresholds[t][0]
            elif t is TestKind.MHC:
                hit = stat_mhc(p) > thresholds[t][0]
            else:
                hit = stat_bj(p) > thresholds[t][0]
            counts[col] += bool(hit)
    return counts


def estimate_power_many(
    tests: Sequence[TestKind],
    model: AlternativeModel,
    table: CriticalValueTable,
    alpha: float,
    reps: int,
    seed: int,
    stream_key: Tuple[int, ...] = (),
    n_jobs: int = 1,
    beta_label: Optional[float] = None,
    r_label: Optional[float] = None,
) -> List[PowerEstimate]:
    """Empirical power of several tests on shared alternative draws."""
    tests = [TestKind(t) for t in tests]
    thresholds = _thresholds_for(tests, table, model.n, alpha)
    key = (seed, POWER_STREAM, *stream_key)
    if n_jobs <= 1:
        counts = _rejection_chunk(tests, thresholds, model, range(reps), key)
    else:
        chunks = np.array_split(np.arange(reps), 4 * n_jobs)
        parts = Parallel(n_jobs=n_jobs)(
            delayed(_rejection_chunk)(tests, thresholds, model, c.tolist(), key)
            for c in chunks
            if c.size
        )
        counts = np.sum(parts, axis=0)
    beta = model.beta if beta_label is None else beta_label
    r = getattr(model.scale, "r", float("nan")) if r_label is None else r_label
    return [
        PowerEstimate.from_rejections(t, beta, r, int(c), reps, seed)
        for t, c in zip(tests, counts)
    ]


def estimate_power(
    test: TestKind,
    model: AlternativeModel,
    table: CriticalValueTable,
    alpha: float,
    reps: int,
    seed: int,
    n_jobs: int = 1,
) -> PowerEstimate:
    """Empirical rejection frequency of one test under one alternative."""
    return estimate_power_many([test], model, table, alpha, reps, seed, n_jobs=n_jobs)[0]


def _needed_calibrations(spec: ExperimentSpec) -> Dict[float, List[TestKind]]:
    """alpha -> scalar tests to calibrate, expanding the hybrid components."""
    by_alpha: Dict[float, set] = {}
    for t in spec.tests:
        if t is TestKind.HYBRID:
            by_alpha.setdefault(spec.alpha / 2.0, set()).update(
                {TestKind.MAX, TestKind.CHISQ}
            )
        else:
            by_alpha.setdefault(spec.alpha, set()).add(t)
    order = list(SCALAR_TESTS)
    return {a: sorted(ts, key=order.index) for a, ts in by_alpha.items()}


def ensure_calibrated(
    spec: ExperimentSpec, table: CriticalValueTable, n_jobs: int = 1
) -> None:
    """Calibrate every threshold the spec needs that is not already cached.

    A calibration batch samples the same null draws for every statistic, so
    all pending tests at a given n are computed in one pass.
    """
    pending: Dict[float, List[TestKind]] = {}
    for alpha, tests in _needed_calibrations(spec).items():
        todo = [
            t
            for t in tests
            if CriticalValueTable._key(t, spec.n, alpha, spec.calib_reps, spec.seed)
            not in table.entries
        ]
        if todo:
            pending[alpha] = todo
    # one shared null pass covering every pending test at all pending alphas
    all_tests = sorted({t for ts in pending.values() for t in ts}, key=list(SCALAR_TESTS).index)
    if all_tests:
        calibrate_tests(
            all_tests,
            spec.n,
            sorted(pending.keys()),
            spec.calib_reps,
            spec.seed,
            table=table,
            n_jobs=n_jobs,
        )


def run_grid(
    spec: ExperimentSpec,
    table: Optional[CriticalValueTable] = None,
    n_jobs: int = 1,
) -> List[PowerEstimate]:
    """One PowerEstimate per (test, beta, r) cell, deterministic under spec.seed."""
    if table is None:
        table = CriticalValueTable()
    ensure_calibrated(spec, table, n_jobs=n_jobs)
    results: List[PowerEstimate] = []
    for bi, beta in enumerate(spec.betas):
        for ri, r in enumerate(spec.r_values):
            scale = rescaled(spec.scale_rule_template, r, beta=beta)
            model = AlternativeModel(
                n=spec.n, beta=beta, family=spec.family, scale=scale, mode=spec.mode
            )
            results.extend(
                estimate_power_many(
                    spec.tests,
                    model,
                    table,
                    spec.alpha,
                    spec.power_reps,
                    spec.seed,
                    stream_key=(bi, ri),
                    n_jobs=n_jobs,
                    r_label=r,
                )
            )
    return results


# ---------------------------------------------------------------------------
# Figure-reproduction datasets
# ---------------------------------------------------------------------------

ALL_TESTS = (
    TestKind.MAX,
    TestKind.HC,
    TestKind.MHC,
    TestKind.BJ,
    TestKind.CHISQ,
    TestKind.HYBRID,
)

_BETAS = tuple(round(0.1 * k, 1) for k in range(1, 10))

# Per-figure families, scale rules and r grids.  The r grids are chosen to
# span the visible power transition at n = 50,000.
_FIGURES = {
    "fig2-laplace": dict(
        family=GFamily(Family.LAPLACE),
        template=FixedScale(1.0),
        # sub-1 values cover the dense-regime (small beta) transition, which
        # happens well before r = 1 at n = 50,000
        r_values=(0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0),
    ),
    "fig3-cauchy": dict(
        family=GFamily(Family.CAUCHY),
        template=PolynomialDecayScale(1.0, 0.5, 1.0),
        r_values=tuple(0.25 * 2 ** (k / 2.0) for k in range(9)),  # 0.25 .. 4, geometric
    ),
    "appendix-gaussian": dict(
        family=GFamily(Family.GAUSSIAN),
        template=FixedScale(1.0),
        r_values=tuple(float(r) for r in range(1, 9)),
    ),
    "appendix-logistic": dict(
        family=GFamily(Family.LOGISTIC),
        template=FixedScale(1.0),
        r_values=tuple(float(r) for r in range(1, 15)),
    ),
    "appendix-chi1": dict(
        family=GFamily(Family.CHI_SQUARED_1),
        template=FixedScale(1.0),
        r_values=tuple(float(r) for r in range(2, 30, 2)),
    ),
    "appendix-t5": dict(
        family=GFamily(Family.STUDENT_T, nu=5.0),
        template=FixedScale(1.0),
        r_values=tuple(float(r) for r in range(1, 11)),
    ),
    "appendix-t3": dict(
        family=GFamily(Family.STUDENT_T, nu=3.0),
        template=FixedScale(1.0),
        r_values=tuple(float(r) for r in range(1, 11)),
    ),
}

FIGURE_IDS = tuple(_FIGURES)


def figure_spec(
    figure_id: str,
    n: int = 50000,
    alpha: float = 0.05,
    power_reps: int = 1000,
    calib_reps: int = 20000,
    seed: int = 0,
    betas: Optional[Sequence[float]] = None,
) -> ExperimentSpec:
    if figure_id not in _FIGURES:
        raise ValueError(f"unknown figure id {figure_id!r}; known: {', '.join(FIGURE_IDS)}")
    cfg = _FIGURES[figure_id]
    return ExperimentSpec(
        n=n,
        alpha=alpha,
        tests=ALL_TESTS,
        betas=tuple(betas) if betas is not None else _BETAS,
        r_values=cfg["r_values"],
        family=cfg["family"],
        scale_rule_template=cfg["template"],
        power_reps=power_reps,
        calib_reps=calib_reps,
        seed=seed,
    )


def write_grid_csv(
    fh: TextIO,
    results: Sequence[PowerEstimate],
    spec: ExperimentSpec,
    provenance: Optional[Dict[str, object]] = None,
) -> None:
    """CSV dataset with a provenance header sufficient to re-run it exactly."""
    meta = {
        "version": __version__,
        "n": spec.n,
        "alpha": spec.alpha,
        "family": spec.family.kind.value,
        "nu": spec.family.nu,
        "scale_rule": type(spec.scale_rule_template).__name__,
        "mode": spec.mode.value,
        "power_reps": spec.power_reps,
        "calib_reps": spec.calib_reps,
        "seed": spec.seed,
        "tests": ",".join(t.value for t in spec.tests),
        "betas": ",".join(f"{b:.17g}" for b in spec.betas),
        "r_values": ",".join(f"{r:.17g}" for r in spec.r_values),
    }
    if provenance:
        meta.update(provenance)
    for k, v in meta.items():
        fh.write(f"# {k}={v}\n")
    fh.write("test,beta,r,power,ci,reps,seed,n,family\n")
    for e in results:
        fh.write(
            f"{e.test.value},{e.beta:.17g},{e.r:.17g},{e.power:.17g},"
            f"{e.ci_half_width:.17g},{e.reps},{e.seed},{spec.n},{spec.family.kind.value}\n"
        )


def reproduce_figure(
    figure_id: str,
    fh: TextIO,
    table: Optional[CriticalValueTable] = None,
    n_jobs: int = 1,
    **spec_kwargs,
) -> List[PowerEstimate]:
    """Run the named figure's full grid and write its dataset to fh."""
    spec = figure_spec(figure_id, **spec_kwargs)
    results = run_grid(spec, table=table, n_jobs=n_jobs)
    write_grid_csv(fh, results, spec, provenance={"figure": figure_id})
    return results
