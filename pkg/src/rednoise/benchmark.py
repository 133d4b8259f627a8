"""Randomized indicator comparison: paired true-CSD / null simulations,
Kendall-tau traces, ROC curves, AUC, and the length-by-fraction AUC grid.

Every instance is a fresh draw of (lambda0, theta0, thetaT, kappa0, kappaT);
the true case follows the fold decline of the restoring rate, the null case
keeps it constant, and both share the same noise-parameter schedules but use
independent noise realizations.  All randomness is keyed on
(master seed, instance index, branch), so results are reproducible and
independent of execution order or worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate as _integrate
from scipy import stats

from .analysis import AnalysisError, WindowPlan, indicator_trace
from .errors import ConfigError
from .model import ParameterSchedule
from .simulate import SimConfig, integrate

INDICATORS = ("var", "ac1", "phi", "neg_lambda_acs", "neg_lambda_psd")

LAMBDA0_RANGE = (0.3, 0.5)
NOISE_PARAM_RANGE = (0.5, 4.0)


@dataclass(frozen=True)
class InstanceDraw:
    lambda0: float
    theta0: float
    thetaT: float
    kappa0: float
    kappaT: float


@dataclass(frozen=True)
class BenchmarkConfig:
    n_instances: int = 500
    total_time: float = 14000.0
    n_windows: int = 20
    window_len: int = 700
    fraction: float = 1.0
    dt_micro: float = 0.1
    indicators: Tuple[str, ...] = INDICATORS

    def __post_init__(self):
        if self.n_instances < 1:
            raise ConfigError("n_instances must be >= 1")
        if not (0.0 < self.fraction <= 1.0):
            raise ConfigError("fraction must lie in (0, 1]")
        if self.n_windows * self.window_len > self.total_time + 1e-9:
            raise ConfigError("n_windows * window_len exceeds the simulated span")
        if self.used_windows < 2:
            raise ConfigError("fraction leaves fewer than 2 usable windows")

    @property
    def used_windows(self) -> int:
        return int(round(self.n_windows * self.fraction))

    @property
    def duration(self) -> float:
        return self.fraction * self.total_time

    def to_json_dict(self) -> dict:
        return {
            "n_instances": self.n_instances,
            "T": self.total_time,
            "n_windows": self.n_windows,
            "window_len": self.window_len,
            "fraction": self.fraction,
            "dt_micro": self.dt_micro,
            "indicators": list(self.indicators),
        }


def _seed_tuple(seed) -> Tuple[int, ...]:
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def draw_instance(master_seed, index: int) -> InstanceDraw:
    rng = np.random.default_rng((*_seed_tuple(master_seed), index, 0))
    lambda0 = rng.uniform(*LAMBDA0_RANGE)
    theta0, theta_t, kappa0, kappa_t = rng.uniform(*NOISE_PARAM_RANGE, size=4)
    return InstanceDraw(lambda0=lambda0, theta0=theta0, thetaT=theta_t,
                        kappa0=kappa0, kappaT=kappa_t)


def _schedule(draw: InstanceDraw, cfg: BenchmarkConfig, lambda_path: str):
    return ParameterSchedule(
        total_time=cfg.total_time,
        lambda0=draw.lambda0,
        theta0=draw.theta0,
        thetaT=draw.thetaT,
        kappa0=draw.kappa0,
        kappaT=draw.kappaT,
        lambda_path=lambda_path,
        trend_fraction=cfg.fraction,
    )


def _series_taus(series, cfg: BenchmarkConfig) -> Dict[str, Optional[float]]:
    plan = WindowPlan(n_windows=cfg.used_windows, window_len=cfg.window_len)
    taus: Dict[str, Optional[float]] = {}
    for name in cfg.indicators:
        try:
            taus[name] = indicator_trace(series, plan, name).kendall_tau
        except AnalysisError:
            taus[name] = None
    return taus


def _instance_worker(args) -> Tuple[int, dict, dict]:
    cfg, master_seed, index = args
    draw = draw_instance(master_seed, index)
    seed = _seed_tuple(master_seed)
    series_true = integrate(
        SimConfig(schedule=_schedule(draw, cfg, "fold"), seed=(*seed, index, 1),
                  dt_micro=cfg.dt_micro, duration=cfg.duration)
    )
    series_null = integrate(
        SimConfig(schedule=_schedule(draw, cfg, "constant"), seed=(*seed, index, 2),
                  dt_micro=cfg.dt_micro, duration=cfg.duration)
    )
    return index, _series_taus(series_true, cfg), _series_taus(series_null, cfg)


@dataclass
class BenchmarkResult:
    config: BenchmarkConfig
    taus_true: Dict[str, List[Optional[float]]]
    taus_null: Dict[str, List[Optional[float]]]

    def n_missing(self, indicator: str) -> int:
        return sum(t is None for t in self.taus_true[indicator]) + sum(
            t is None for t in self.taus_null[indicator]
        )

    def roc(self, indicator: str) -> "RocResult":
        return roc_curve(self.taus_true[indicator], self.taus_null[indicator])


def run_benchmark(cfg: BenchmarkConfig, master_seed,
                  n_workers: int = 1) -> BenchmarkResult:
    """Run the paired true/null protocol over all instances.

    Deterministic for a fixed master seed, independent of worker count.
    """
    jobs = [(cfg, master_seed, i) for i in range(cfg.n_instances)]
    if n_workers > 1 and cfg.n_instances > 1:
        chunk = max(1, cfg.n_instances // (4 * n_workers))
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_instance_worker, jobs, chunksize=chunk))
    else:
        results = [_instance_worker(job) for job in jobs]
    results.sort(key=lambda r: r[0])
    taus_true = {name: [r[1][name] for r in results] for name in cfg.indicators}
    taus_null = {name: [r[2][name] for r in results] for name in cfg.indicators}
    return BenchmarkResult(config=cfg, taus_true=taus_true, taus_null=taus_null)


# ---------------------------------------------------------------------------
# ROC / AUC


@dataclass
class RocResult:
    """Step ROC curve swept over Kendall-tau thresholds from +inf to -inf."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float
    auc_mann_whitney: float
    zero_threshold: Tuple[float, float]  # (FPR, TPR) at threshold 0
    n_true: int
    n_null: int


def mann_whitney_auc(taus_true: Sequence[float], taus_null: Sequence[float]) -> float:
    """Fraction of (true, null) pairs with tau_true > tau_null, ties half."""
    t = np.asarray([v for v in taus_true if v is not None], dtype=float)
    n = np.asarray([v for v in taus_null if v is not None], dtype=float)
    if t.size == 0 or n.size == 0:
        raise ConfigError("need at least one finite tau on each side")
    ranks = stats.rankdata(np.concatenate([t, n]))
    u_stat = float(np.sum(ranks[: t.size])) - t.size * (t.size + 1) / 2.0
    return u_stat / (t.size * n.size)


def roc_curve(taus_true: Sequence[float], taus_null: Sequence[float]) -> RocResult:
    """ROC over the observed tau values; classification rule is tau > h.

    Missing (None) entries are dropped from each side independently.
    """
    t = np.sort(np.asarray([v for v in taus_true if v is not None], dtype=float))
    n = np.sort(np.asarray([v for v in taus_null if v is not None], dtype=float))
    if t.size == 0 or n.size == 0:
        raise ConfigError("need at least one finite tau on each side")

    observed = np.unique(np.concatenate([t, n, [0.0]]))
    thresholds = np.concatenate([[np.inf], observed[::-1], [-np.inf]])
    tpr = (t.size - np.searchsorted(t, thresholds, side="right")) / t.size
    fpr = (n.size - np.searchsorted(n, thresholds, side="right")) / n.size
    auc = float(_integrate.trapezoid(tpr, fpr))

    fpr0 = float(np.mean(n > 0.0))
    tpr0 = float(np.mean(t > 0.0))
    return RocResult(
        thresholds=thresholds,
        fpr=fpr,
        tpr=tpr,
        auc=auc,
        auc_mann_whitney=mann_whitney_auc(t, n),
        zero_threshold=(fpr0, tpr0),
        n_true=int(t.size),
        n_null=int(n.size),
    )


# ---------------------------------------------------------------------------
# length x fraction grid


@dataclass
class GridCell:
    indicator: str
    length: float
    fraction: float
    auc: Optional[float]
    n_effective: int


def grid_benchmark(lengths: Sequence[float], fractions: Sequence[float],
                   base_cfg: BenchmarkConfig, master_seed,
                   n_workers: int = 1) -> List[GridCell]:
    """One AUC per (indicator, length, fraction); infeasible cells get None.

    The series length is split into ``base_cfg.n_windows`` windows; the
    fraction controls how many of them (and how much of the trend) are used.
    """
    cells: List[GridCell] = []
    for li, length in enumerate(lengths):
        window_len = int(round(length / base_cfg.n_windows))
        for fi, fraction in enumerate(fractions):
            try:
                cfg = replace(
                    base_cfg,
                    total_time=float(length),
                    window_len=window_len,
                    fraction=float(fraction),
                )
            except ConfigError:
                for name in base_cfg.indicators:
                    cells.append(GridCell(name, float(length), float(fraction),
                                          auc=None, n_effective=0))
                continue
            result = run_benchmark(cfg, (*_seed_tuple(master_seed), li, fi),
                                   n_workers=n_workers)
            for name in cfg.indicators:
                roc = result.roc(name)
                cells.append(
                    GridCell(name, float(length), float(fraction),
                             auc=roc.auc,
                             n_effective=min(roc.n_true, roc.n_null))
                )
    return cells
