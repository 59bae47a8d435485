"""LAD-based unit root tests under time-varying volatility."""

from heterour.baselines import MStats, abb_m_test, m_statistics
from heterour.bootstrap import (
    AbbPlan,
    abb_test,
    build_pseudo_errors,
    build_pseudo_series,
    draw_block_indices,
    hhj_block_length,
    mbb_variance,
    standardize_residuals,
)
from heterour.config import StatKind, TestConfig, TestResult
from heterour.core import (
    DeterministicSpec,
    DetKind,
    GlsFit,
    LadFit,
    TimeSeries,
    gls_adjust,
    lad_fit,
    lad_objective,
    sgn,
)
from heterour.teststats import StatPair, compute_stats, density_at_zero
from heterour.volatility import (
    KernelSpec,
    VolatilityEstimate,
    cv_bandwidth,
    estimate_volatility,
)

__version__ = "0.1.0"
