"""Shared fixtures and sampling-error oracles for the test suite.

The standard errors used in the Monte-Carlo agreement tests come from the
classical large-sample formulas for Gaussian linear processes:

* Var(sample variance) ~ (2/N) * sum over all integer lags of gamma(k)^2,
* Var(sample AC(tau)) ~ Bartlett's formula,

with the autocorrelations taken from the closed forms of the model under
test, truncated once they decay below 1e-14.
"""

import numpy as np
import pytest

from rednoise.model import ParameterSchedule, stationary_ac, stationary_variance


def closed_form_rho(params, max_lag: int = 2000) -> np.ndarray:
    """Autocorrelations rho(0..K) with the negligible tail cut off."""
    rho = stationary_ac(params, np.arange(max_lag + 1))
    nonzero = np.nonzero(np.abs(rho) > 1e-14)[0]
    return rho[: nonzero[-1] + 1] if nonzero.size else rho[:1]


def variance_se(params, n: int) -> float:
    """Large-sample standard error of the sample variance over n points."""
    rho = closed_form_rho(params)
    s = 1.0 + 2.0 * float(np.sum(rho[1:] ** 2))
    return stationary_variance(params) * float(np.sqrt(2.0 * s / n))


def ac_se(params, tau: int, n: int) -> float:
    """Bartlett standard error of the lag-tau sample autocorrelation."""
    rho = closed_form_rho(params)

    def rho_at(k: int) -> float:
        k = abs(k)
        return float(rho[k]) if k < rho.size else 0.0

    total = 0.0
    for k in range(1, rho.size + tau + 1):
        term = rho_at(k + tau) + rho_at(k - tau) - 2.0 * rho_at(tau) * rho_at(k)
        total += term * term
    return float(np.sqrt(total / n))


def constant_schedule(lam: float, theta: float, kappa: float,
                      total_time: float) -> ParameterSchedule:
    """Schedule holding (lam, theta, kappa) fixed over [0, total_time]."""
    return ParameterSchedule(
        total_time=total_time,
        lambda0=lam,
        theta0=theta,
        thetaT=theta,
        kappa0=kappa,
        kappaT=kappa,
        lambda_path="constant",
    )


@pytest.fixture(scope="session", autouse=True)
def warm_integrator():
    """Compile the integration kernel up front so timed tests stay honest."""
    from rednoise.simulate import SimConfig, integrate

    integrate(SimConfig(schedule=constant_schedule(0.5, 2.0, 1.0, 50.0), seed=0))
