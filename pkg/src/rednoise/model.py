"""Stationary statistics of linearly restoring processes under red or white noise.

The observable X relaxes towards zero at rate ``lam`` and is forced either by
an Ornstein-Uhlenbeck (red) noise with correlation rate ``theta`` and coupling
``kappa``, or by white noise with amplitude ``sigma``.  All closed forms here
are exact for the stationary regime; every red-noise quantity is symmetric
under swapping ``lam`` and ``theta``, and the white model is the limit
``theta, kappa -> inf`` with ``kappa/theta -> sigma``.

Deterministic parameter schedules for nonstationary experiments (fold-type
decline of the restoring rate, linear trends in the noise parameters) live
here as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError

# Relative spacing of the rates below which the equal-rates closed forms are
# used; the generic formulas have a removable singularity at lam == theta.
EQ_EPS = 1e-8


def _require_positive(**fields) -> None:
    for name, value in fields.items():
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class RedNoiseParams:
    """Parameters (lam, theta, kappa) of the red-noise-driven linear model."""

    lam: float
    theta: float
    kappa: float

    def __post_init__(self):
        _require_positive(lam=self.lam, theta=self.theta, kappa=self.kappa)

    @property
    def rates_equal(self) -> bool:
        return abs(self.lam - self.theta) <= EQ_EPS * max(self.lam, self.theta)

    def white_limit(self) -> "WhiteNoiseParams":
        """White-noise parameters implied by kappa/theta -> sigma."""
        return WhiteNoiseParams(lam=self.lam, sigma=self.kappa / self.theta)


@dataclass(frozen=True)
class WhiteNoiseParams:
    """Parameters (lam, sigma) of the white-noise-driven linear model."""

    lam: float
    sigma: float

    def __post_init__(self):
        _require_positive(lam=self.lam, sigma=self.sigma)


StabilityParams = Union[RedNoiseParams, WhiteNoiseParams]


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _maybe_scalar(arr, scalar: bool):
    return float(arr) if scalar else arr


# ---------------------------------------------------------------------------
# closed forms, internal array versions


def _equal_rate(lam: float, theta: float) -> float:
    # midpoint; the two rates agree to EQ_EPS when this branch is taken
    return 0.5 * (lam + theta)


def _red_variance(lam: float, theta: float, kappa: float) -> float:
    if abs(lam - theta) <= EQ_EPS * max(lam, theta):
        a = _equal_rate(lam, theta)
        return kappa**2 / (4.0 * a**3)
    return kappa**2 / (2.0 * lam * theta * (lam + theta))


def _red_ac(lam: float, theta: float, tau):
    tau = np.asarray(tau, dtype=float)
    if abs(lam - theta) <= EQ_EPS * max(lam, theta):
        a = _equal_rate(lam, theta)
        return (1.0 + a * tau) * np.exp(-a * tau)
    return (lam * np.exp(-theta * tau) - theta * np.exp(-lam * tau)) / (lam - theta)


def _red_psd_ct(lam: float, theta: float, kappa: float, omega):
    omega = np.asarray(omega, dtype=float)
    return kappa**2 / ((theta**2 + omega**2) * (lam**2 + omega**2))


def _disc_ou_kernel(a: float, cos_omega):
    """sinh(a) / (cosh(a) - cos(omega)), stable for arbitrarily large a > 0."""
    q = math.exp(-a)
    return (1.0 - q * q) / (1.0 + q * q - 2.0 * cos_omega * q)


def _red_psd_dt(lam: float, theta: float, kappa: float, omega):
    cos_w = np.cos(np.asarray(omega, dtype=float))
    if abs(lam - theta) <= EQ_EPS * max(lam, theta):
        a = _equal_rate(lam, theta)
        q = math.exp(-a)
        # cosh(a)(a cos w + sinh a) - sinh(a) cos w - a, rescaled by 4 exp(-2a)
        num = (
            2.0 * a * cos_w * q * (1.0 + q * q)
            + (1.0 - q**4)
            - 2.0 * cos_w * q * (1.0 - q * q)
            - 4.0 * a * q * q
        )
        den = (1.0 + q * q - 2.0 * cos_w * q) ** 2
        return kappa**2 / (4.0 * a**3) * num / den
    pref = kappa**2 / (2.0 * lam * theta * (lam**2 - theta**2))
    return pref * (
        lam * _disc_ou_kernel(theta, cos_w) - theta * _disc_ou_kernel(lam, cos_w)
    )


def _white_psd_dt(lam: float, sigma: float, omega):
    cos_w = np.cos(np.asarray(omega, dtype=float))
    return sigma**2 / (2.0 * lam) * _disc_ou_kernel(lam, cos_w)


# ---------------------------------------------------------------------------
# public API


def stationary_variance(p: StabilityParams) -> float:
    """Exact stationary variance of the observable."""
    if isinstance(p, WhiteNoiseParams):
        return p.sigma**2 / (2.0 * p.lam)
    return _red_variance(p.lam, p.theta, p.kappa)


def stationary_ac(p: StabilityParams, tau):
    """Stationary autocorrelation at lag ``tau`` (scalar or array, >= 0)."""
    tau_arr, scalar = _as_array(tau)
    if np.any(tau_arr < 0):
        raise DomainError("lag tau must be nonnegative")
    if isinstance(p, WhiteNoiseParams):
        out = np.exp(-p.lam * tau_arr)
    else:
        out = _red_ac(p.lam, p.theta, tau_arr)
    return _maybe_scalar(out, scalar)


def psd_continuous(p: StabilityParams, omega):
    """Continuous-time power spectral density at angular frequency omega."""
    omega_arr, scalar = _as_array(omega)
    if not np.all(np.isfinite(omega_arr)):
        raise DomainError("omega must be finite")
    if isinstance(p, WhiteNoiseParams):
        out = p.sigma**2 / (p.lam**2 + omega_arr**2)
    else:
        out = _red_psd_ct(p.lam, p.theta, p.kappa, omega_arr)
    return _maybe_scalar(out, scalar)


def psd_discrete(p: StabilityParams, omega):
    """Discrete-time (unit sampling step) power spectral density.

    The function is 2*pi-periodic and even; it is classically probed on
    omega in (0, pi].  Satisfies the Parseval identity
    (1/2pi) * integral_{-pi}^{pi} S(w) dw == stationary_variance(p).
    """
    omega_arr, scalar = _as_array(omega)
    if not np.all(np.isfinite(omega_arr)):
        raise DomainError("omega must be finite")
    if isinstance(p, WhiteNoiseParams):
        out = _white_psd_dt(p.lam, p.sigma, omega_arr)
    else:
        out = _red_psd_dt(p.lam, p.theta, p.kappa, omega_arr)
    return _maybe_scalar(out, scalar)


# ---------------------------------------------------------------------------
# parameter schedules

LAMBDA_PATHS = ("fold", "constant")


@dataclass(frozen=True)
class ParameterSchedule:
    """Deterministic evolution of (lam, theta, kappa) over [0, total_time].

    The restoring rate follows either the fold-bifurcation decline
    ``lam0 * sqrt(1 - t/T)`` or stays constant.  The noise parameters
    interpolate linearly between their endpoint values.  With
    ``trend_fraction = f < 1`` the noise trends unfold over [0, f*T] only
    (their full endpoint range compressed into that interval) and are held
    constant afterwards, while the fold decline keeps using global time, so
    that a run truncated at f*T has traversed exactly the first f of the
    fold trend.
    """

    total_time: float
    lambda0: float
    theta0: float
    thetaT: float
    kappa0: float
    kappaT: float
    lambda_path: str = "fold"
    trend_fraction: float = 1.0

    def __post_init__(self):
        _require_positive(
            total_time=self.total_time,
            lambda0=self.lambda0,
            theta0=self.theta0,
            thetaT=self.thetaT,
        )
        # kappa == 0 is allowed: it yields the unforced (identically zero) path
        if not (self.kappa0 >= 0 and self.kappaT >= 0):
            raise DomainError("kappa endpoints must be nonnegative")
        if not (math.isfinite(self.kappa0) and math.isfinite(self.kappaT)):
            raise DomainError("kappa endpoints must be finite")
        if self.lambda_path not in LAMBDA_PATHS:
            raise ConfigError(f"unknown lambda_path {self.lambda_path!r}")
        if not (0.0 < self.trend_fraction <= 1.0):
            raise ConfigError("trend_fraction must lie in (0, 1]")

    def evaluate(self, t):
        """Return (lam, theta, kappa) at time(s) t in [0, total_time]."""
        t_arr, scalar = _as_array(t)
        if np.any(t_arr < 0) or np.any(t_arr > self.total_time):
            raise DomainError("t outside [0, total_time]")
        t_trend = np.minimum(t_arr, self.trend_fraction * self.total_time)
        u = t_trend / (self.trend_fraction * self.total_time)
        theta = self.theta0 + u * (self.thetaT - self.theta0)
        kappa = self.kappa0 + u * (self.kappaT - self.kappa0)
        if self.lambda_path == "fold":
            lam = self.lambda0 * np.sqrt(1.0 - t_trend / self.total_time)
        else:
            lam = np.full_like(u, self.lambda0)
        return (
            _maybe_scalar(lam, scalar),
            _maybe_scalar(theta, scalar),
            _maybe_scalar(kappa, scalar),
        )

    def params_at(self, t: float) -> RedNoiseParams:
        lam, theta, kappa = self.evaluate(t)
        return RedNoiseParams(lam=lam, theta=theta, kappa=kappa)

    def to_json_dict(self) -> dict:
        return {
            "T": self.total_time,
            "lambda0": self.lambda0,
            "lambda_path": self.lambda_path,
            "theta0": self.theta0,
            "thetaT": self.thetaT,
            "kappa0": self.kappa0,
            "kappaT": self.kappaT,
            "trend_fraction": self.trend_fraction,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ParameterSchedule":
        try:
            return cls(
                total_time=float(obj["T"]),
                lambda0=float(obj["lambda0"]),
                lambda_path=str(obj.get("lambda_path", "fold")),
                theta0=float(obj["theta0"]),
                thetaT=float(obj["thetaT"]),
                kappa0=float(obj["kappa0"]),
                kappaT=float(obj["kappaT"]),
                trend_fraction=float(obj.get("trend_fraction", 1.0)),
            )
        except KeyError as exc:
            raise ConfigError(f"schedule config missing key {exc}") from exc


def stability_params_to_json(p: StabilityParams) -> dict:
    if isinstance(p, WhiteNoiseParams):
        return {"kind": "white", "lambda": p.lam, "sigma": p.sigma}
    return {"kind": "red", "lambda": p.lam, "theta": p.theta, "kappa": p.kappa}


def stability_params_from_json(obj: dict) -> StabilityParams:
    kind = obj.get("kind")
    try:
        if kind == "white":
            return WhiteNoiseParams(lam=float(obj["lambda"]), sigma=float(obj["sigma"]))
        if kind == "red":
            return RedNoiseParams(
                lam=float(obj["lambda"]),
                theta=float(obj["theta"]),
                kappa=float(obj["kappa"]),
            )
    except KeyError as exc:
        raise ConfigError(f"stability params missing key {exc}") from exc
    raise ConfigError(f"unknown stability params kind {kind!r}")
