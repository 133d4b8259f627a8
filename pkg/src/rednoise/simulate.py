"""Sample-path generation for the (non)stationary red-noise model.

Two routes are provided:

* :func:`integrate` steps the coupled pair (X, U) through the schedule with a
  small micro step and subsamples the output.  Each micro step applies the
  exact Gaussian transition of the linear SDE with the parameters frozen at
  the step start, so constant-parameter runs reproduce the closed-form
  stationary statistics without discretization bias.
* :func:`simulate_arma` draws the exact ARMA(2,1) discrete-time counterpart
  of the stationary process at unit sampling step, with the moving-average
  coefficients obtained by :func:`solve_arma_coeffs`.

A plain exact Ornstein-Uhlenbeck sampler (:func:`simulate_ou`) is included
for white-limit experiments and noise-channel oracles.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from numba import njit
from scipy import optimize, signal

from .errors import ConfigError, DomainError, EstimationError
from .model import (
    EQ_EPS,
    ParameterSchedule,
    RedNoiseParams,
    stationary_ac,
    stationary_variance,
)

# Samples discarded at the start of stationary draws (ARMA / OU samplers).
BURN_IN = 1000

_BIN_HEADER = struct.Struct("<Qd")  # sample count, sampling step


@dataclass
class TimeSeries:
    """Uniformly sampled real-valued series."""

    values: np.ndarray
    dt: float
    t0: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 2:
            raise DomainError("a time series needs at least 2 samples")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("time series values must be finite")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError("dt must be positive and finite")

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    # -- CSV ----------------------------------------------------------------

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,x\n")
            for t, x in zip(self.times, self.values):
                fh.write(f"{float(t)!r},{float(x)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        from .analysis import load_series_csv  # shared parser / validation

        series = load_series_csv(path)
        if isinstance(series, tuple):
            raise DomainError(f"{path}: expected a single-column series")
        return series

    # -- compact binary cache -----------------------------------------------

    def to_binary(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(_BIN_HEADER.pack(self.values.size, self.dt))
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def from_binary(cls, path) -> "TimeSeries":
        with open(path, "rb") as fh:
            header = fh.read(_BIN_HEADER.size)
            if len(header) != _BIN_HEADER.size:
                raise DomainError(f"{path}: truncated binary series header")
            n, dt = _BIN_HEADER.unpack(header)
            payload = fh.read(8 * n)
        if len(payload) != 8 * n:
            raise DomainError(f"{path}: truncated binary series payload")
        values = np.frombuffer(payload, dtype="<f8").astype(float)
        return cls(values=values, dt=dt)


@dataclass
class SimConfig:
    """Configuration of one integration run."""

    schedule: ParameterSchedule
    seed: object
    dt_micro: float = 0.1
    dt_out: float = 1.0
    x0: float = 0.0
    u0: float = 0.0
    duration: Optional[float] = None  # defaults to the schedule's total time

    def __post_init__(self):
        if not (self.dt_micro > 0):
            raise ConfigError("dt_micro must be positive")
        ratio = self.dt_out / self.dt_micro
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError("dt_out must be an integer multiple of dt_micro")
        if self.duration is not None and not (
            0 < self.duration <= self.schedule.total_time + 1e-9
        ):
            raise ConfigError("duration must lie in (0, total_time]")
        if self.seed is None:
            raise ConfigError("a seed is required; no wall-clock entropy is used")

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.dt_out / self.dt_micro))


def _phi1(z: np.ndarray) -> np.ndarray:
    """(1 - exp(-z)) / z with the z -> 0 limit handled."""
    z_safe = np.where(z < 1e-12, 1.0, z)
    out = -np.expm1(-z_safe) / z_safe
    return np.where(z < 1e-12, 1.0 - 0.5 * z, out)


def _step_coefficients(lam, theta, kappa, dt):
    """Exact one-step Gaussian transition for frozen (lam, theta, kappa).

    Returns the propagator entries and the Cholesky factors of the one-step
    noise covariance.  Near-equal rates are nudged apart by 1e-4 relative to
    keep the removable singularity at lam == theta numerically benign.
    """
    lam = np.asarray(lam, dtype=float)
    theta = np.asarray(theta, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    gap_floor = 1e-4 * np.maximum(lam, theta)
    theta = np.where(np.abs(theta - lam) < gap_floor, lam + gap_floor, theta)

    pxx = np.exp(-lam * dt)
    puu = np.exp(-theta * dt)
    gap = theta - lam
    pxu = kappa * (pxx - puu) / gap

    i_2l = dt * _phi1(2.0 * lam * dt)
    i_2t = dt * _phi1(2.0 * theta * dt)
    i_lt = dt * _phi1((lam + theta) * dt)
    quu = i_2t
    qxu = kappa / gap * (i_lt - i_2t)
    qxx = kappa**2 / gap**2 * (i_2l - 2.0 * i_lt + i_2t)

    l11 = np.sqrt(np.maximum(qxx, 0.0))
    l21 = np.where(l11 > 0.0, qxu / np.where(l11 > 0.0, l11, 1.0), 0.0)
    l22 = np.sqrt(np.maximum(quu - l21**2, 0.0))
    return pxx, pxu, puu, l11, l21, l22


@njit(cache=True)
def _propagate(pxx, pxu, puu, l11, l21, l22, z1, z2, m, x0, u0):  # pragma: no cover
    n_out = pxx.size // m
    xs = np.empty(n_out)
    us = np.empty(n_out)
    x = x0
    u = u0
    j = 0
    for k in range(n_out * m):
        x_new = pxx[k] * x + pxu[k] * u + l11[k] * z1[k]
        u_new = puu[k] * u + l21[k] * z1[k] + l22[k] * z2[k]
        x = x_new
        u = u_new
        if (k + 1) % m == 0:
            xs[j] = x
            us[j] = u
            j += 1
    return xs, us


def integrate(cfg: SimConfig, return_noise: bool = False):
    """Generate a sample path of the scheduled model.

    Output samples sit at t = dt_out, 2*dt_out, ...; the initial condition
    itself is not emitted.  With ``return_noise`` the subsampled forcing
    process U is returned alongside X.
    """
    duration = cfg.duration if cfg.duration is not None else cfg.schedule.total_time
    m = cfg.steps_per_sample
    n_micro = int(round(duration / cfg.dt_micro))
    n_micro -= n_micro % m
    if n_micro < 2 * m:
        raise ConfigError("duration too short for the requested output step")

    t_steps = cfg.dt_micro * np.arange(n_micro)
    lam, theta, kappa = cfg.schedule.evaluate(t_steps)
    if np.max(lam) * cfg.dt_micro >= 2.0 or np.max(theta) * cfg.dt_micro >= 2.0:
        raise ConfigError(
            "unstable step: lambda*dt_micro and theta*dt_micro must stay below 2"
        )

    coeffs = _step_coefficients(lam, theta, kappa, cfg.dt_micro)
    rng = np.random.default_rng(cfg.seed)
    z = rng.standard_normal((n_micro, 2))
    xs, us = _propagate(*coeffs, np.ascontiguousarray(z[:, 0]),
                        np.ascontiguousarray(z[:, 1]), m, cfg.x0, cfg.u0)
    x_series = TimeSeries(values=xs, dt=cfg.dt_out, t0=cfg.dt_out)
    if not return_noise:
        return x_series
    u_series = TimeSeries(values=us, dt=cfg.dt_out, t0=cfg.dt_out)
    return x_series, u_series


def simulate_ou(rate: float, amplitude: float, n: int, seed,
                dt: float = 1.0, burn_in: int = BURN_IN) -> TimeSeries:
    """Exact stationary draw of dY = -rate*Y dt + amplitude*dW sampled at dt."""
    if rate <= 0 or amplitude < 0:
        raise DomainError("rate must be positive and amplitude nonnegative")
    if n < 2:
        raise DomainError("need at least 2 samples")
    a = math.exp(-rate * dt)
    noise_sd = amplitude * math.sqrt((1.0 - a * a) / (2.0 * rate))
    rng = np.random.default_rng(seed)
    z = noise_sd * rng.standard_normal(n + burn_in)
    y = signal.lfilter([1.0], [1.0, -a], z)
    return TimeSeries(values=y[burn_in:], dt=dt)


# ---------------------------------------------------------------------------
# exact ARMA(2,1) counterpart at unit sampling step


@dataclass(frozen=True)
class ArmaCoeffs:
    """Coefficients of X_{k+1} = ar1 X_k + ar2 X_{k-1} + s0 z_k + s1 z_{k-1}."""

    ar1: float
    ar2: float
    sigma0: float
    sigma1: float

    def __post_init__(self):
        if self.sigma0 < 0:
            raise DomainError("sigma0 must be nonnegative")


def _arma_acov_base(ar1: float, ar2: float, s0: float, s1: float) -> np.ndarray:
    """gamma(0), gamma(1), gamma(2) from the moment equations."""
    psi1 = ar1 * s0 + s1
    a_mat = np.array(
        [
            [1.0, -ar1, -ar2],
            [-ar1, 1.0 - ar2, 0.0],
            [-ar2, -ar1, 1.0],
        ]
    )
    rhs = np.array([s0 * s0 + s1 * psi1, s0 * s1, 0.0])
    return np.linalg.solve(a_mat, rhs)


def arma_autocovariance(c: ArmaCoeffs, max_lag: int) -> np.ndarray:
    """Autocovariances gamma(0..max_lag) implied by the coefficients."""
    gam = list(_arma_acov_base(c.ar1, c.ar2, c.sigma0, c.sigma1))
    for _ in range(3, max_lag + 1):
        gam.append(c.ar1 * gam[-1] + c.ar2 * gam[-2])
    return np.array(gam[: max_lag + 1])


def solve_arma_coeffs(p: RedNoiseParams) -> ArmaCoeffs:
    """Moment-matched MA coefficients for the sampled process at dt = 1.

    (sigma0, sigma1) are solved numerically so the implied lag-0 and lag-1
    autocovariances reproduce the closed forms; residual must fall below
    1e-10.
    """
    ar1 = math.exp(-p.lam) + math.exp(-p.theta)
    ar2 = -math.exp(-(p.lam + p.theta))
    gamma0 = stationary_variance(p)
    gamma1 = gamma0 * stationary_ac(p, 1.0)

    def residual(s):
        implied = _arma_acov_base(ar1, ar2, s[0], s[1])
        return [implied[0] - gamma0, implied[1] - gamma1]

    rho1 = gamma1 / gamma0
    s0_sq = gamma0 * (1.0 - ar1**2 - ar2**2 - 2.0 * ar1 * ar2 * rho1)
    s0_init = math.sqrt(max(s0_sq, 1e-12 * gamma0))
    best = None
    for s1_init in (0.0, 0.2 * s0_init, -0.2 * s0_init):
        sol = optimize.root(residual, [s0_init, s1_init], method="hybr", tol=1e-14)
        res_norm = float(np.linalg.norm(residual(sol.x)))
        if best is None or res_norm < best[1]:
            best = (sol.x, res_norm)
        if res_norm < 1e-12:
            break
    x_best, res_norm = best
    if res_norm > 1e-10:
        raise EstimationError(
            f"ARMA coefficient solve did not converge (residual {res_norm:.3e})"
        )
    s0, s1 = float(abs(x_best[0])), float(x_best[1])
    if x_best[0] < 0:
        s1 = -s1
    return ArmaCoeffs(ar1=ar1, ar2=ar2, sigma0=s0, sigma1=s1)


def simulate_arma(c: ArmaCoeffs, n: int, seed, burn_in: int = BURN_IN) -> TimeSeries:
    """Draw ``n`` samples of the ARMA(2,1) process after discarding a transient."""
    if n < 2:
        raise DomainError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(n + burn_in)
    x = signal.lfilter([c.sigma0, c.sigma1], [1.0, -c.ar1, -c.ar2], z)
    return TimeSeries(values=x[burn_in:], dt=1.0)
