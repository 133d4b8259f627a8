"""Restoring-rate estimation under red noise and CSD indicator benchmarking."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    EQ_EPS,
    ParameterSchedule,
    RedNoiseParams,
    StabilityParams,
    WhiteNoiseParams,
    psd_continuous,
    psd_discrete,
    stationary_ac,
    stationary_variance,
)
from .simulate import (  # noqa: F401
    ArmaCoeffs,
    SimConfig,
    TimeSeries,
    arma_autocovariance,
    integrate,
    simulate_arma,
    simulate_ou,
    solve_arma_coeffs,
)
from .estimators import (  # noqa: F401
    FitResult,
    Periodogram,
    THETA_WHITE_CUTOFF,
    ac_hat,
    fit_acs,
    fit_glsar,
    fit_psd,
    periodogram,
    theta_from_ou,
    var_hat,
)
from .analysis import (  # noqa: F401
    DetrendResult,
    IndicatorTrace,
    TippingPoint,
    WindowPlan,
    detect_tipping,
    dual_theta_consistency,
    gaussian_detrend,
    indicator_trace,
    kendall_tau,
    window_partition,
)
from .benchmark import (  # noqa: F401
    BenchmarkConfig,
    BenchmarkResult,
    GridCell,
    InstanceDraw,
    RocResult,
    grid_benchmark,
    mann_whitney_auc,
    roc_curve,
    run_benchmark,
)
from .errors import (  # noqa: F401
    AnalysisError,
    ConfigError,
    DomainError,
    EstimationError,
    RednoiseError,
)
