"""Windowed indicator traces, trend statistics, detrending, and tipping search.

This layer owns centering policy: each window is mean-removed before an
estimator sees it, and for external data the slow trend is removed first with
a Gaussian filter so that only the approximately stationary residual feeds
the estimators.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from scipy import stats
from scipy.ndimage import gaussian_filter1d

from . import estimators
from .errors import AnalysisError, DomainError, EstimationError
from .simulate import TimeSeries

# relative tolerance on sampling-step jitter for external CSV input
MAX_REL_JITTER = 1e-6

# curvature below this fraction of the trend range counts as "no pronounced
# tipping"
NOCURV_REL_EPS = 1e-9


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class WindowPlan:
    """How to cut a series into estimation windows."""

    n_windows: int
    window_len: int
    mode: str = "disjoint"  # or "overlapping"
    stride: Optional[int] = None

    def __post_init__(self):
        if self.n_windows < 1 or self.window_len < 2:
            raise DomainError("need n_windows >= 1 and window_len >= 2")
        if self.mode not in ("disjoint", "overlapping"):
            raise DomainError(f"unknown window mode {self.mode!r}")
        if self.mode == "overlapping" and (self.stride is None or self.stride < 1):
            raise DomainError("overlapping windows need a stride >= 1")


def window_partition(x: TimeSeries, plan: WindowPlan) -> List[TimeSeries]:
    """Cut the series per plan; disjoint mode drops leftover tail samples."""
    v = x.values
    if plan.mode == "disjoint":
        if plan.n_windows * plan.window_len > v.size:
            raise DomainError(
                f"{plan.n_windows} disjoint windows of {plan.window_len} "
                f"do not fit into {v.size} samples"
            )
        starts = [i * plan.window_len for i in range(plan.n_windows)]
    else:
        last_start = v.size - plan.window_len
        if last_start < 0:
            raise DomainError("series shorter than one window")
        starts = list(range(0, last_start + 1, plan.stride))
    return [
        TimeSeries(
            values=v[s : s + plan.window_len],
            dt=x.dt,
            t0=x.t0 + s * x.dt,
        )
        for s in starts
    ]


def count_overlapping_windows(n_samples: int, window_len: int, stride: int) -> int:
    return max(0, (n_samples - window_len) // stride + 1)


# ---------------------------------------------------------------------------
# Kendall's tau


def kendall_tau(values) -> float:
    """Tie-corrected (tau-b) rank correlation of the values against their index.

    Returns 0 by convention when the tie correction degenerates (e.g. all
    values identical).
    """
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise DomainError("need at least 2 values")
    tau = stats.kendalltau(np.arange(v.size), v, variant="b").statistic
    if tau is None or not math.isfinite(tau):
        return 0.0
    return float(tau)


# ---------------------------------------------------------------------------
# indicators

# name -> (window estimator, increase signals CSD)
_INDICATORS: dict = {}


def _register(name: str, func: Callable[[np.ndarray], float]) -> None:
    _INDICATORS[name] = func


def _lambda_from_fit(fit: estimators.FitResult, source: str) -> float:
    if fit.failed or fit.lambda_hat is None:
        raise EstimationError(f"{source} fit failed: {fit.reason}")
    return fit.lambda_hat


def _theta_from_fit(fit: estimators.FitResult, source: str) -> float:
    if fit.kind != "red" or fit.theta_hat is None:
        raise EstimationError(f"{source} fit has no finite theta (kind={fit.kind})")
    return fit.theta_hat


_register("var", lambda v: estimators.var_hat(v))
_register("ac1", lambda v: estimators.ac_hat(v, 1))
_register("phi", lambda v: estimators.fit_glsar(v))
_register("neg_lambda_acs", lambda v: -_lambda_from_fit(estimators.fit_acs(v), "ACS"))
_register("neg_lambda_psd", lambda v: -_lambda_from_fit(estimators.fit_psd(v), "PSD"))
_register("lambda_acs", lambda v: _lambda_from_fit(estimators.fit_acs(v), "ACS"))
_register("lambda_psd", lambda v: _lambda_from_fit(estimators.fit_psd(v), "PSD"))
_register("theta_acs", lambda v: _theta_from_fit(estimators.fit_acs(v), "ACS"))
_register("theta_psd", lambda v: _theta_from_fit(estimators.fit_psd(v), "PSD"))
_register("theta_ou", lambda v: estimators.theta_from_ou(v))

# indicators whose increase signals critical slowing down
CSD_POSITIVE = {"var", "ac1", "phi", "neg_lambda_acs", "neg_lambda_psd"}

INDICATOR_NAMES = tuple(_INDICATORS)


@dataclass
class IndicatorTrace:
    """Per-window values of one indicator plus their trend statistic."""

    name: str
    values: List[Optional[float]]
    kendall_tau: Optional[float]
    increases_for_csd: bool
    n_failed: int = 0


def indicator_trace(x: TimeSeries, plan: WindowPlan,
                    indicator: Union[str, Callable]) -> IndicatorTrace:
    """Apply one estimator per (mean-removed) window and attach Kendall's tau.

    Failed windows are recorded as None and excluded from the tau
    computation, which uses the surviving windows' time order.
    """
    if callable(indicator):
        func, name = indicator, getattr(indicator, "__name__", "custom")
    else:
        try:
            func = _INDICATORS[indicator]
        except KeyError:
            raise DomainError(f"unknown indicator {indicator!r}") from None
        name = indicator

    values: List[Optional[float]] = []
    for window in window_partition(x, plan):
        centered = window.values - np.mean(window.values)
        try:
            values.append(float(func(centered)))
        except (EstimationError, DomainError):
            values.append(None)
    valid = [(i, v) for i, v in enumerate(values) if v is not None]
    if not valid:
        raise AnalysisError(f"indicator {name!r} failed on every window")
    if len(valid) >= 2:
        idx, vals = zip(*valid)
        tau = float(
            stats.kendalltau(np.asarray(idx), np.asarray(vals), variant="b").statistic
        )
        if not math.isfinite(tau):
            tau = 0.0
    else:
        tau = None
    return IndicatorTrace(
        name=name,
        values=values,
        kendall_tau=tau,
        increases_for_csd=name in CSD_POSITIVE,
        n_failed=len(values) - len(valid),
    )


# ---------------------------------------------------------------------------
# detrending and tipping-point localization


@dataclass
class DetrendResult:
    trend: np.ndarray
    residual: np.ndarray
    bandwidth: float


def gaussian_detrend(x: TimeSeries, bandwidth: float) -> DetrendResult:
    """Split the series into a Gaussian-filtered trend and its residual.

    Kernel std is ``bandwidth`` samples, truncated at 4 sigma, with
    reflect-padded boundaries; trend + residual reconstructs the input.
    """
    v = x.values
    if bandwidth <= 0:
        raise DomainError("bandwidth must be positive")
    if bandwidth >= v.size / 2:
        raise DomainError("bandwidth must be below half the series length")
    trend = gaussian_filter1d(v, sigma=bandwidth, mode="reflect", truncate=4.0)
    return DetrendResult(trend=trend, residual=v - trend, bandwidth=bandwidth)


@dataclass
class TippingPoint:
    index: int
    curvature: float
    pronounced: bool


def detect_tipping(trend) -> TippingPoint:
    """Sample of most negative centered second difference of the trend.

    Ties resolve to the earliest interior index.  When the winning curvature
    is negligible against the trend's range the result is flagged as not
    pronounced.
    """
    v = np.asarray(getattr(trend, "values", trend), dtype=float)
    if v.size < 3:
        raise DomainError("need at least 3 samples")
    d2 = v[2:] - 2.0 * v[1:-1] + v[:-2]
    pos = int(np.argmin(d2))
    curvature = float(d2[pos])
    span = float(np.max(v) - np.min(v))
    pronounced = -curvature > NOCURV_REL_EPS * span
    return TippingPoint(index=pos + 1, curvature=curvature, pronounced=pronounced)


# ---------------------------------------------------------------------------
# dual-theta consistency


@dataclass
class DualThetaWindow:
    window: int
    theta_from_v: Optional[float]
    theta_from_p: Optional[float]

    @property
    def ratio(self) -> Optional[float]:
        if self.theta_from_v is None or self.theta_from_p is None:
            return None
        if self.theta_from_p == 0:
            return None
        return self.theta_from_v / self.theta_from_p


def dual_theta_consistency(v: TimeSeries, p: TimeSeries, plan: WindowPlan,
                           method: str = "acs") -> List[DualThetaWindow]:
    """Per-window noise-correlation estimates from the observable and the
    noise channel, side by side.

    theta_from_v comes from the constrained fit on the observable,
    theta_from_p from the OU AC(1) inversion on the noise channel.
    """
    if len(v) != len(p) or v.dt != p.dt:
        raise DomainError("v and p must be aligned: same length and step")
    if method not in ("acs", "psd"):
        raise DomainError(f"unknown fit method {method!r}")
    v_trace = indicator_trace(v, plan, f"theta_{method}")
    p_trace = indicator_trace(p, plan, "theta_ou")
    return [
        DualThetaWindow(window=i, theta_from_v=tv, theta_from_p=tp)
        for i, (tv, tp) in enumerate(zip(v_trace.values, p_trace.values))
    ]


# ---------------------------------------------------------------------------
# CSV input


def load_series_csv(path) -> Union[TimeSeries, Tuple[TimeSeries, TimeSeries]]:
    """Read `t,x` / `t,value` (single) or `t,v,p` (paired) series from CSV.

    Sampling must be uniform to relative jitter below 1e-6.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DomainError(f"{path}: empty file") from None
        n_cols = len(header)
        if n_cols not in (2, 3) or header[0].strip().lower() != "t":
            raise DomainError(
                f"{path}: expected header 't,x', 't,value' or 't,v,p', got {header!r}"
            )
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise DomainError(f"{path}:{line_no}: expected {n_cols} columns")
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                raise DomainError(f"{path}:{line_no}: non-numeric value") from None
    if len(rows) < 2:
        raise DomainError(f"{path}: need at least 2 samples")
    data = np.asarray(rows, dtype=float)
    t = data[:, 0]
    steps = np.diff(t)
    dt = float(np.median(steps))
    if dt <= 0:
        raise DomainError(f"{path}: time column must be strictly increasing")
    if np.max(np.abs(steps - dt)) > MAX_REL_JITTER * dt:
        raise DomainError(f"{path}: sampling jitter exceeds relative {MAX_REL_JITTER}")
    if n_cols == 2:
        return TimeSeries(values=data[:, 1], dt=dt, t0=float(t[0]))
    return (
        TimeSeries(values=data[:, 1], dt=dt, t0=float(t[0])),
        TimeSeries(values=data[:, 2], dt=dt, t0=float(t[0])),
    )
