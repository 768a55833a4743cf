"""Global-null testing for sparse Gaussian sequence models.

Six tests (max, higher criticism, modified higher criticism, Berk-Jones,
chi-square, and the max/chi-square hybrid), Monte Carlo calibration of
their null quantiles, power estimation under sparse mixture alternatives,
and closed-form asymptotic quantities (tail exponents, critical sparsity
levels, limiting max-test power).
"""

__version__ = "0.1.0"

from .families import (  # noqa: F401
    AlternativeModel,
    Family,
    FixedScale,
    GFamily,
    InverseRootLogScale,
    PolynomialDecayScale,
    PowerScale,
    RootLogScale,
    SampleMode,
    g_tail,
    sample_alternative,
    sample_null,
    sigma_n,
)
from .stats import (  # noqa: F401
    hybrid_reject,
    pvalues,
    stat_bj,
    stat_chisq,
    stat_hc,
    stat_max,
    stat_mhc,
)
from .calibration import (  # noqa: F401
    CriticalValueTable,
    TestKind,
    UncalibratedError,
    calibrate,
    calibrate_tests,
    reject,
    sidak_max_threshold,
    test_statistic,
)
from .theory import (  # noqa: F401
    ExpTail,
    GaussTail,
    LambdaCurve,
    PolyTail,
    TailExponent,
    appendix_a_thresholds,
    asymptotic_max_power,
    critical_sparsity,
    lambda_curve,
    tail_sandwich_check,
    tau_quadrature,
    tau_sup_approx,
)
from .harness import (  # noqa: F401
    ExperimentSpec,
    PowerEstimate,
    estimate_power,
    reproduce_figure,
    run_grid,
)
