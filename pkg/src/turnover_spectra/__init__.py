"""Turnover-reduction analytics for internally crossed alpha streams.

Combining many alpha streams on one execution platform nets offsetting
trades internally, so the combined book trades less than the sum of its
parts. This package estimates that reduction from the alpha correlation
matrix: panel ingestion with missing-data policies, redundancy pruning and
positive-definite repair, spectral turnover models built on the leading
eigenvalue/eigenvector, and a Monte-Carlo netting simulator for empirical
comparison.
"""

from .conditioning import (
    MatrixLike,
    RepairConfig,
    SpectralDecomposition,
    classify_definiteness,
    correlation_from_csv,
    covariance_from_csv,
    default_floor,
    eigendecompose,
    matrix_report,
    matrix_to_csv,
    portfolio_volatility,
    prune_redundant,
    rj_repair,
)
from .errors import (
    CalibrationError,
    CollinearFactorsError,
    CoverageError,
    DegenerateSeriesError,
    DegenerateTopWarning,
    IllDefinedVolatilityError,
    InvalidDiagonalError,
    InvalidMatrixError,
    PanelFormatError,
    RejectedSeriesError,
    TurnoverSpectraError,
    UndefinedRegressorError,
)
from .panel import (
    COMPLETE_CASES,
    ESTIMATION_MODES,
    EXTERNAL,
    PAIRWISE_COMPLETE,
    CorrelationMatrix,
    CovarianceMatrix,
    TimeSeriesPanel,
    load_panel,
    ols_residualize,
    sample_moments,
    write_panel,
)
from .simulate import (
    SimConfig,
    SimResult,
    SweepOptions,
    SweepResult,
    gen_one_factor_panel,
    gen_trade_matrix,
    no_intercept_regression,
    one_factor_correlation,
    one_factor_generator,
    simulate_crossing,
    simulate_crossing_paths,
    sweep_rho_star,
    sweep_to_csv,
)
from .turnover import (
    ExactCalibration,
    FactoredRelation,
    SignedBasis,
    TurnoverInputs,
    TurnoverReport,
    calibrate_exact_B,
    fix_sign_basis,
    naive_turnover,
    p1_share,
    pnl_with_costs,
    rho_prime,
    rho_star,
    rho_star_factored,
    spectral_terms,
    spectral_turnover_full,
    spectral_turnover_large_n,
    turnover_exact_b,
    turnover_report,
    turnover_t2,
)

__version__ = "0.1.0"

__all__ = [
    "COMPLETE_CASES",
    "ESTIMATION_MODES",
    "EXTERNAL",
    "PAIRWISE_COMPLETE",
    "CalibrationError",
    "CollinearFactorsError",
    "CorrelationMatrix",
    "CovarianceMatrix",
    "CoverageError",
    "DegenerateSeriesError",
    "DegenerateTopWarning",
    "ExactCalibration",
    "FactoredRelation",
    "IllDefinedVolatilityError",
    "InvalidDiagonalError",
    "InvalidMatrixError",
    "MatrixLike",
    "PanelFormatError",
    "RejectedSeriesError",
    "RepairConfig",
    "SignedBasis",
    "SimConfig",
    "SimResult",
    "SpectralDecomposition",
    "SweepOptions",
    "SweepResult",
    "TimeSeriesPanel",
    "TurnoverInputs",
    "TurnoverReport",
    "TurnoverSpectraError",
    "UndefinedRegressorError",
    "calibrate_exact_B",
    "classify_definiteness",
    "correlation_from_csv",
    "covariance_from_csv",
    "default_floor",
    "eigendecompose",
    "fix_sign_basis",
    "gen_one_factor_panel",
    "gen_trade_matrix",
    "load_panel",
    "matrix_report",
    "matrix_to_csv",
    "naive_turnover",
    "no_intercept_regression",
    "ols_residualize",
    "one_factor_correlation",
    "one_factor_generator",
    "p1_share",
    "pnl_with_costs",
    "portfolio_volatility",
    "prune_redundant",
    "rho_prime",
    "rho_star",
    "rho_star_factored",
    "rj_repair",
    "sample_moments",
    "simulate_crossing",
    "simulate_crossing_paths",
    "spectral_terms",
    "spectral_turnover_full",
    "spectral_turnover_large_n",
    "sweep_rho_star",
    "sweep_to_csv",
    "turnover_exact_b",
    "turnover_report",
    "turnover_t2",
    "write_panel",
]
