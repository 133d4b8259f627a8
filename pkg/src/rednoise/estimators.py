"""Stability estimators for centered, uniformly sampled series (unit step).

All estimators assume the input has zero mean (centering / detrending happens
upstream in the analysis layer).  Two constrained fits recover the restoring
rate directly: :func:`fit_acs` matches the sample autocorrelation structure
and :func:`fit_psd` matches the log of the discrete-time periodogram, both
over the open set {0 < lam < theta}.  The feasible set is handled by
optimizing in (log lam, log(theta - lam)) coordinates; runaway theta is
interpreted as the white-noise limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .errors import DomainError, EstimationError
from .model import _red_psd_dt, _red_ac, _white_psd_dt

# theta above this value (in units of the sampling step) is reported as the
# white-noise limit: the noise autocorrelation over one step is < exp(-50).
THETA_WHITE_CUTOFF = 50.0

# floor added to periodogram bins before taking logs
EPS_POWER = 1e-300

DEFAULT_TAU_MAX = 3
DEFAULT_SMOOTHING = 10

# multi-start grid for both fits (lam, theta)
_FIT_STARTS = (
    (0.1, 1.0),
    (0.3, 1.0),
    (0.5, 1.0),
    (0.1, 3.0),
    (0.3, 3.0),
    (0.5, 3.0),
)

# caps on the log-coordinates keep exp() finite while still allowing the
# optimizer to signal a boundary escape (theta up to ~lam + e^45)
_LOG_CAP = 45.0

_NM_OPTIONS_2D = {"xatol": 1e-6, "fatol": 1e-12, "maxiter": 800, "maxfev": 1200}
_NM_OPTIONS_3D = {"xatol": 1e-6, "fatol": 1e-12, "maxiter": 1200, "maxfev": 1800}


def _values(x) -> np.ndarray:
    v = getattr(x, "values", x)
    return np.asarray(v, dtype=float)


# ---------------------------------------------------------------------------
# moment estimators


def var_hat(x) -> float:
    """Mean of squares; consistent for the stationary variance of centered input."""
    v = _values(x)
    if v.size < 2:
        raise DomainError("need at least 2 samples")
    return float(np.mean(v * v))


def ac_hat(x, tau: int) -> float:
    """Lag-tau autocorrelation estimate (ratio form, not clipped to (-1, 1))."""
    v = _values(x)
    n = v.size
    if not 1 <= tau < n:
        raise DomainError(f"lag tau must satisfy 1 <= tau < {n}")
    denom = float(np.dot(v, v))
    if denom == 0.0:
        raise EstimationError("zero-variance series has no autocorrelation")
    num = float(np.dot(v[:-tau], v[tau:]))
    return n / (n - tau) * num / denom


# ---------------------------------------------------------------------------
# fit results


@dataclass
class FitResult:
    """Outcome of a constrained stability fit."""

    kind: str  # "red" | "white" | "failed"
    lambda_hat: Optional[float] = None
    theta_hat: Optional[float] = None
    kappa_hat: Optional[float] = None
    sigma_hat: Optional[float] = None
    objective: Optional[float] = None
    iters: int = 0
    reason: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.kind == "failed"

    def to_json_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "lambda": self.lambda_hat,
            "theta": self.theta_hat,
            "kappa": self.kappa_hat,
            "objective": self.objective,
            "iters": self.iters,
        }
        if self.sigma_hat is not None:
            out["sigma"] = self.sigma_hat
        if self.reason is not None:
            out["reason"] = self.reason
        return out


def _decode(z):
    lam = math.exp(min(z[0], _LOG_CAP))
    theta = lam + math.exp(min(z[1], _LOG_CAP))
    return lam, theta


def _multistart_minimize(objective, make_start, ndim: int):
    options = _NM_OPTIONS_2D if ndim == 2 else _NM_OPTIONS_3D
    best = None
    total_iters = 0
    for lam0, theta0 in _FIT_STARTS:
        z0 = make_start(lam0, theta0)
        res = optimize.minimize(objective, z0, method="Nelder-Mead", options=options)
        total_iters += res.nit
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
        if best is not None and best.fun < 1e-16:
            break
    return best, total_iters


# ---------------------------------------------------------------------------
# autocorrelation-structure fit


def fit_ac_targets(targets: Sequence[float], ac1: Optional[float] = None,
                   var: Optional[float] = None) -> FitResult:
    """Fit (lam, theta) to autocorrelation targets at lags 1..len(targets).

    ``ac1``/``var`` feed the white-limit fallback; ``ac1`` defaults to the
    first target.
    """
    targets = np.asarray(targets, dtype=float)
    if targets.size < 2:
        raise DomainError("need targets for at least lags 1 and 2")
    if ac1 is None:
        ac1 = float(targets[0])
    taus = np.arange(1, targets.size + 1, dtype=float)

    def objective(z):
        lam, theta = _decode(z)
        model = _red_ac(lam, theta, taus)
        diff = model - targets
        return float(np.dot(diff, diff))

    best, iters = _multistart_minimize(
        objective, lambda l0, t0: (math.log(l0), math.log(t0 - l0)), ndim=2
    )
    if best is None:
        return FitResult(kind="failed", iters=iters,
                         reason="optimizer returned no finite objective")
    lam, theta = _decode(best.x)
    if theta <= THETA_WHITE_CUTOFF:
        return FitResult(kind="red", lambda_hat=lam, theta_hat=theta,
                         objective=float(best.fun), iters=iters)
    # boundary escape: report the white limit via the AC(1) inversion
    if not (0.0 < ac1 < 1.0):
        return FitResult(kind="failed", objective=float(best.fun), iters=iters,
                         reason="white-limit fallback needs AC(1) in (0, 1)")
    lam_w = -math.log(ac1)
    sigma = math.sqrt(2.0 * lam_w * var) if var is not None and var > 0 else None
    return FitResult(kind="white", lambda_hat=lam_w, sigma_hat=sigma,
                     objective=float(best.fun), iters=iters)


def fit_acs(x, tau_max: int = DEFAULT_TAU_MAX) -> FitResult:
    """Constrained fit of the closed-form ACS to the sample autocorrelations."""
    v = _values(x)
    if v.size <= tau_max + 1:
        raise DomainError("series too short for the requested tau_max")
    try:
        targets = [ac_hat(v, tau) for tau in range(1, tau_max + 1)]
    except EstimationError as exc:
        return FitResult(kind="failed", reason=str(exc))
    return fit_ac_targets(targets, ac1=targets[0], var=var_hat(v))


# ---------------------------------------------------------------------------
# periodogram and PSD fit


@dataclass
class Periodogram:
    """Periodogram values on the positive nonzero frequency set."""

    frequencies: np.ndarray
    power: np.ndarray
    block_size: int = 1


def periodogram(x, block_size: int = 1) -> Periodogram:
    """Squared-magnitude DFT on omega_l = 2*pi*l/N, zero and Nyquist excluded.

    ``block_size`` > 1 averages that many contiguous bins (frequencies and
    powers alike); a trailing partial block is dropped.
    """
    v = _values(x)
    n = v.size
    if n < 4:
        raise DomainError("need at least 4 samples for a periodogram")
    if block_size < 1:
        raise DomainError("block_size must be >= 1")
    spectrum = np.fft.rfft(v)[1 : (n + 1) // 2]
    power = (spectrum.real**2 + spectrum.imag**2) / n
    freqs = 2.0 * np.pi * np.arange(1, power.size + 1) / n
    if block_size > 1:
        n_blocks = power.size // block_size
        if n_blocks < 4:
            raise DomainError("block_size too large for the series length")
        keep = n_blocks * block_size
        power = power[:keep].reshape(n_blocks, block_size).mean(axis=1)
        freqs = freqs[:keep].reshape(n_blocks, block_size).mean(axis=1)
    return Periodogram(frequencies=freqs, power=power, block_size=block_size)


def fit_psd_targets(freqs: np.ndarray, power: np.ndarray,
                    var: Optional[float] = None) -> FitResult:
    """Fit (lam, theta, kappa) to PSD values by least squares on the logs."""
    freqs = np.asarray(freqs, dtype=float)
    log_power = np.log(np.asarray(power, dtype=float) + EPS_POWER)

    def objective(z):
        lam, theta = _decode(z)
        kappa = math.exp(min(z[2], _LOG_CAP))
        model = _red_psd_dt(lam, theta, kappa, freqs)
        diff = np.log(np.maximum(model, EPS_POWER)) - log_power
        return float(np.dot(diff, diff))

    def make_start(l0, t0):
        if var is not None and var > 0:
            kappa0 = math.sqrt(var * 2.0 * l0 * t0 * (l0 + t0))
        else:
            kappa0 = 1.0
        return (math.log(l0), math.log(t0 - l0), math.log(kappa0))

    best, iters = _multistart_minimize(objective, make_start, ndim=3)
    if best is None:
        return FitResult(kind="failed", iters=iters,
                         reason="optimizer returned no finite objective")
    lam, theta = _decode(best.x)
    kappa = math.exp(min(best.x[2], _LOG_CAP))
    if theta <= THETA_WHITE_CUTOFF:
        return FitResult(kind="red", lambda_hat=lam, theta_hat=theta,
                         kappa_hat=kappa, objective=float(best.fun), iters=iters)
    return _fit_psd_white(freqs, log_power, var, iters)


def _fit_psd_white(freqs, log_power, var, prior_iters: int) -> FitResult:
    """White-limit branch: fit the two-parameter white discrete-time PSD."""

    def objective(z):
        lam = math.exp(min(z[0], _LOG_CAP))
        sigma = math.exp(min(z[1], _LOG_CAP))
        model = _white_psd_dt(lam, sigma, freqs)
        diff = np.log(np.maximum(model, EPS_POWER)) - log_power
        return float(np.dot(diff, diff))

    best = None
    iters = prior_iters
    for lam0 in (0.1, 0.3, 0.5):
        sigma0 = math.sqrt(2.0 * lam0 * var) if var is not None and var > 0 else 1.0
        res = optimize.minimize(objective, (math.log(lam0), math.log(sigma0)),
                                method="Nelder-Mead", options=_NM_OPTIONS_2D)
        iters += res.nit
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        return FitResult(kind="failed", iters=iters,
                         reason="white PSD fit returned no finite objective")
    lam = math.exp(min(best.x[0], _LOG_CAP))
    sigma = math.exp(min(best.x[1], _LOG_CAP))
    return FitResult(kind="white", lambda_hat=lam, sigma_hat=sigma,
                     objective=float(best.fun), iters=iters)


def fit_psd(x, smoothing: int = DEFAULT_SMOOTHING) -> FitResult:
    """Constrained fit of the discrete-time PSD to the smoothed periodogram."""
    v = _values(x)
    pg = periodogram(v, block_size=smoothing)
    return fit_psd_targets(pg.frequencies, pg.power, var=var_hat(v))


# ---------------------------------------------------------------------------
# discrete-time comparison estimators


def fit_glsar(x, tol: float = 1e-6, max_iter: int = 50) -> float:
    """AR(1)-error regression of increments on the state (iterated FGLS).

    Cochrane-Orcutt style: OLS slope, residual AR(1) coefficient, quasi-
    difference, refit; returns phi_hat = 1 + slope.
    """
    y = _values(x)
    n = y.size
    if n < 10:
        raise DomainError("need at least 10 samples")
    dy = np.diff(y)
    state = y[:-1]
    if float(np.dot(state, state)) == 0.0:
        raise EstimationError("constant input: zero-variance regressor")

    rho = 0.0
    slope = 0.0
    for _ in range(max_iter):
        if rho == 0.0:
            reg, resp = state, dy
        else:
            reg = state[1:] - rho * state[:-1]
            resp = dy[1:] - rho * dy[:-1]
        denom = float(np.dot(reg, reg))
        if denom <= 0.0 or not math.isfinite(denom):
            raise EstimationError("singular regression in FGLS iteration")
        slope = float(np.dot(reg, resp)) / denom
        resid = dy - slope * state
        resid_sq = float(np.dot(resid, resid))
        if resid_sq == 0.0:
            break
        rho_new = float(np.dot(resid[:-1], resid[1:])) / resid_sq
        if abs(rho_new - rho) < tol:
            rho = rho_new
            break
        rho = rho_new
    return 1.0 + slope


def theta_from_ou(x) -> float:
    """Noise correlation rate from the AC(1) inversion of a pure OU channel."""
    a1 = ac_hat(_values(x), 1)
    if not (0.0 < a1 < 1.0):
        raise EstimationError(f"no valid OU fit: AC(1) = {a1:.4f} outside (0, 1)")
    return -math.log(a1)
