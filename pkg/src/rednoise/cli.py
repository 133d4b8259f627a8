"""Command-line entry point.

Subcommands cover the full workflow: ``simulate`` writes sample paths,
``estimate`` runs the stability estimators on a stored series, ``trace``
computes a windowed indicator trace, ``analyze`` runs the detrend / tipping /
dual-theta workflow on external data, and ``benchmark`` / ``grid`` drive the
randomized ROC comparison.

Exit codes: 0 success, 2 configuration or input error, 3 I/O failure,
4 estimation/analysis failure on a required path.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict

import numpy as np

from . import __version__, analysis, benchmark, estimators
from .errors import (
    AnalysisError,
    ConfigError,
    DomainError,
    EstimationError,
)
from .model import ParameterSchedule
from .simulate import SimConfig, TimeSeries, integrate

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ESTIMATION = 4


# ---------------------------------------------------------------------------
# atomic output helpers


def _write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, obj) -> None:
    _write_text_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _series_csv_text(columns: dict) -> str:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    lines = [",".join(names)]
    for row in zip(*arrays):
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        schedule = ParameterSchedule.from_json_dict(json.load(fh))
    cfg = SimConfig(
        schedule=schedule,
        seed=args.seed,
        dt_micro=args.delta_t,
        dt_out=args.out_step,
        duration=args.duration,
    )
    series = integrate(cfg)
    effective = {
        "schedule": schedule.to_json_dict(),
        "seed": args.seed,
        "dt_micro": cfg.dt_micro,
        "dt_out": cfg.dt_out,
        "duration": cfg.duration if cfg.duration is not None else schedule.total_time,
        "n_samples": len(series),
    }
    print(json.dumps(effective, sort_keys=True), file=sys.stderr)
    series.to_csv(args.output + ".part")
    os.replace(args.output + ".part", args.output)
    if args.binary:
        series.to_binary(args.binary)
    return 0


# ---------------------------------------------------------------------------
# estimate

_ESTIMATE_CHOICES = ("var", "ac1", "acs", "psd", "phi", "theta_ou")


def _run_estimator(name: str, values, args):
    if name == "var":
        return estimators.var_hat(values)
    if name == "ac1":
        return estimators.ac_hat(values, 1)
    if name == "acs":
        return estimators.fit_acs(values, tau_max=args.tau_max).to_json_dict()
    if name == "psd":
        return estimators.fit_psd(values, smoothing=args.smoothing).to_json_dict()
    if name == "phi":
        return estimators.fit_glsar(values)
    if name == "theta_ou":
        return estimators.theta_from_ou(values)
    raise ConfigError(f"unknown estimator {name!r}")


def _cmd_estimate(args) -> int:
    series = analysis.load_series_csv(args.input)
    if isinstance(series, tuple):
        raise DomainError(f"{args.input}: estimate expects a single-column series")
    centered = series.values - np.mean(series.values)
    names = args.estimator or ["acs", "psd"]
    report = {
        "config": {
            "input": args.input,
            "estimators": names,
            "tau_max": args.tau_max,
            "smoothing": args.smoothing,
            "n_samples": len(series),
        },
        "estimates": {name: _run_estimator(name, centered, args) for name in names},
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        _write_text_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# trace


def _make_plan(n_samples: int, args) -> analysis.WindowPlan:
    n_windows = args.n_windows
    if n_windows is None:
        n_windows = n_samples // args.window_len
        if n_windows < 2:
            raise AnalysisError(
                f"only {n_samples} samples available: fewer than two windows "
                f"of {args.window_len}"
            )
    if getattr(args, "stride", None):
        return analysis.WindowPlan(n_windows=n_windows, window_len=args.window_len,
                                   mode="overlapping", stride=args.stride)
    return analysis.WindowPlan(n_windows=n_windows, window_len=args.window_len)


def _trace_json(trace: analysis.IndicatorTrace) -> dict:
    return {
        "indicator": trace.name,
        "values": trace.values,
        "kendall_tau": trace.kendall_tau,
        "increases_for_csd": trace.increases_for_csd,
        "n_failed": trace.n_failed,
    }


def _cmd_trace(args) -> int:
    series = analysis.load_series_csv(args.input)
    if isinstance(series, tuple):
        raise DomainError(f"{args.input}: trace expects a single-column series")
    plan = _make_plan(len(series), args)
    trace = analysis.indicator_trace(series, plan, args.indicator)
    report = {
        "config": {
            "input": args.input,
            "indicator": args.indicator,
            "n_windows": plan.n_windows,
            "window_len": plan.window_len,
            "mode": plan.mode,
        },
        "trace": _trace_json(trace),
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        _write_text_atomic(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# analyze

_ANALYZE_SINGLE = ("var", "ac1", "lambda_acs", "lambda_psd", "theta_acs", "theta_psd")


def _cmd_analyze(args) -> int:
    loaded = analysis.load_series_csv(args.input)
    paired = isinstance(loaded, tuple)
    v, p = loaded if paired else (loaded, None)

    det_v = analysis.gaussian_detrend(v, args.bandwidth)
    det_p = analysis.gaussian_detrend(p, args.bandwidth) if paired else None
    tipping = analysis.detect_tipping(det_v.trend)

    if tipping.index < args.window_len:
        raise AnalysisError(
            f"tipping index {tipping.index} precedes even one window of "
            f"{args.window_len} samples; nothing to analyze"
        )
    resid_v = TimeSeries(det_v.residual[: tipping.index], dt=v.dt, t0=v.t0)
    resid_p = (
        TimeSeries(det_p.residual[: tipping.index], dt=p.dt, t0=p.t0)
        if paired else None
    )
    plan = _make_plan(len(resid_v), args)

    traces = {}
    for name in _ANALYZE_SINGLE:
        try:
            traces[name] = _trace_json(analysis.indicator_trace(resid_v, plan, name))
        except AnalysisError as exc:
            traces[name] = {"indicator": name, "error": str(exc)}
    dual = None
    if paired:
        traces["theta_ou"] = _trace_json(
            analysis.indicator_trace(resid_p, plan, "theta_ou")
        )
        dual = [
            {
                "window": row.window,
                "theta_from_v": row.theta_from_v,
                "theta_from_p": row.theta_from_p,
                "ratio": row.ratio,
            }
            for row in analysis.dual_theta_consistency(resid_v, resid_p, plan,
                                                       method=args.dual_method)
        ]

    os.makedirs(args.outdir, exist_ok=True)
    columns = {"t": v.times, "v": v.values, "v_trend": det_v.trend,
               "v_residual": det_v.residual}
    if paired:
        columns.update(p=p.values, p_trend=det_p.trend, p_residual=det_p.residual)
    _write_text_atomic(os.path.join(args.outdir, "detrended.csv"),
                       _series_csv_text(columns))

    window_rows = {"window": list(range(plan.n_windows))}
    window_rows["t_start"] = [
        v.t0 + i * plan.window_len * v.dt for i in range(plan.n_windows)
    ]
    for name, tr in traces.items():
        if "values" in tr:
            window_rows[name] = [
                float("nan") if val is None else val for val in tr["values"]
            ]
    _write_text_atomic(os.path.join(args.outdir, "windows.csv"),
                       _series_csv_text(window_rows))

    report = {
        "config": {
            "input": args.input,
            "bandwidth": args.bandwidth,
            "window_len": plan.window_len,
            "n_windows": plan.n_windows,
            "paired": paired,
            "dual_method": args.dual_method if paired else None,
        },
        "tipping": {
            "index": tipping.index,
            "time": float(v.times[tipping.index]),
            "pronounced": tipping.pronounced,
            "curvature": tipping.curvature,
        },
        "traces": traces,
        "dual_theta": dual,
    }
    _write_json(os.path.join(args.outdir, "report.json"), report)
    print(f"analyze: report written to {args.outdir}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# benchmark / grid


def _cmd_benchmark(args) -> int:
    cfg = benchmark.BenchmarkConfig(
        n_instances=args.instances,
        total_time=args.length,
        n_windows=args.n_windows,
        window_len=args.window_len,
        fraction=args.fraction,
        dt_micro=args.delta_t,
        indicators=tuple(args.indicators.split(",")) if args.indicators
        else benchmark.INDICATORS,
    )
    result = benchmark.run_benchmark(cfg, args.seed, n_workers=args.threads)
    os.makedirs(args.outdir, exist_ok=True)

    summary = {
        "config": {**cfg.to_json_dict(), "seed": args.seed,
                   "used_windows": cfg.used_windows},
        "auc": {},
        "zero_threshold": {},
        "n_missing": {},
    }
    for name in cfg.indicators:
        roc = result.roc(name)
        summary["auc"][name] = roc.auc
        summary["zero_threshold"][name] = {
            "fpr": roc.zero_threshold[0],
            "tpr": roc.zero_threshold[1],
        }
        summary["n_missing"][name] = result.n_missing(name)
        _write_text_atomic(
            os.path.join(args.outdir, f"roc_{name}.csv"),
            _series_csv_text(
                {"threshold": roc.thresholds, "fpr": roc.fpr, "tpr": roc.tpr}
            ),
        )
    _write_json(os.path.join(args.outdir, "auc_summary.json"), summary)

    print(f"{'indicator':<16} {'AUC':>8} {'FPR@0':>8} {'TPR@0':>8}")
    for name in cfg.indicators:
        z = summary["zero_threshold"][name]
        print(f"{name:<16} {summary['auc'][name]:8.4f} "
              f"{z['fpr']:8.4f} {z['tpr']:8.4f}")
    return 0


def _cmd_grid(args) -> int:
    lengths = [float(s) for s in args.lengths.split(",")]
    fractions = [float(s) for s in args.fractions.split(",")]
    base = benchmark.BenchmarkConfig(
        n_instances=args.instances,
        n_windows=args.n_windows,
        dt_micro=args.delta_t,
        indicators=tuple(args.indicators.split(",")) if args.indicators
        else benchmark.INDICATORS,
    )
    cells = benchmark.grid_benchmark(lengths, fractions, base, args.seed,
                                     n_workers=args.threads)
    os.makedirs(args.outdir, exist_ok=True)
    lines = ["indicator,length,fraction,auc,n_effective"]
    for cell in cells:
        auc = "" if cell.auc is None else repr(cell.auc)
        lines.append(f"{cell.indicator},{cell.length!r},{cell.fraction!r},"
                     f"{auc},{cell.n_effective}")
    _write_text_atomic(os.path.join(args.outdir, "auc_grid.csv"),
                       "\n".join(lines) + "\n")
    _write_json(
        os.path.join(args.outdir, "grid_summary.json"),
        {
            "config": {**base.to_json_dict(), "seed": args.seed,
                       "lengths": lengths, "fractions": fractions},
            "cells": [asdict(cell) for cell in cells],
        },
    )
    print(f"grid: {len(cells)} cells written to {args.outdir}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rednoise",
        description="Restoring-rate estimation and CSD indicator benchmarking",
    )
    parser.add_argument("--version", action="version",
                        version=f"rednoise {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a scheduled model run")
    sim.add_argument("--config", required=True, help="schedule JSON file")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("-o", "--output", required=True, help="output CSV path")
    sim.add_argument("--binary", help="optional binary dump path")
    sim.add_argument("--delta-t", type=float, default=0.1,
                     help="integrator micro step (default 0.1)")
    sim.add_argument("--out-step", type=float, default=1.0,
                     help="output sampling step (default 1)")
    sim.add_argument("--duration", type=float, default=None,
                     help="simulate only [0, duration] of the schedule")
    sim.set_defaults(func=_cmd_simulate)

    est = sub.add_parser("estimate", help="run stability estimators on a CSV series")
    est.add_argument("-i", "--input", required=True)
    est.add_argument("-e", "--estimator", action="append",
                     choices=_ESTIMATE_CHOICES,
                     help="repeatable; default: acs and psd")
    est.add_argument("--tau-max", type=int, default=estimators.DEFAULT_TAU_MAX)
    est.add_argument("--smoothing", type=int, default=estimators.DEFAULT_SMOOTHING)
    est.add_argument("-o", "--output", help="JSON output path (default stdout)")
    est.set_defaults(func=_cmd_estimate)

    trc = sub.add_parser("trace", help="windowed indicator trace with Kendall's tau")
    trc.add_argument("-i", "--input", required=True)
    trc.add_argument("--indicator", default="neg_lambda_acs",
                     choices=analysis.INDICATOR_NAMES)
    trc.add_argument("--window-len", type=int, default=700)
    trc.add_argument("--n-windows", type=int, default=None,
                     help="default: as many as fit")
    trc.add_argument("--stride", type=int, default=None,
                     help="use overlapping windows with this stride")
    trc.add_argument("-o", "--output", help="JSON output path (default stdout)")
    trc.set_defaults(func=_cmd_trace)

    ana = sub.add_parser("analyze",
                         help="detrend, locate tipping, trace estimators")
    ana.add_argument("-i", "--input", required=True,
                     help="CSV with header t,value or t,v,p")
    ana.add_argument("--bandwidth", type=float, default=200.0,
                     help="Gaussian trend filter std in samples (default 200)")
    ana.add_argument("--window-len", type=int, default=700)
    ana.add_argument("--n-windows", type=int, default=None)
    ana.add_argument("--dual-method", choices=("acs", "psd"), default="acs")
    ana.add_argument("--outdir", required=True)
    ana.set_defaults(func=_cmd_analyze)

    ben = sub.add_parser("benchmark", help="paired true/null ROC comparison")
    ben.add_argument("--seed", type=int, required=True)
    ben.add_argument("--instances", type=int, default=500)
    ben.add_argument("--length", type=float, default=14000.0)
    ben.add_argument("--fraction", type=float, default=1.0)
    ben.add_argument("--n-windows", type=int, default=20)
    ben.add_argument("--window-len", type=int, default=700)
    ben.add_argument("--delta-t", type=float, default=0.1)
    ben.add_argument("--threads", type=int, default=1)
    ben.add_argument("--indicators", default=None,
                     help="comma-separated subset of the indicator set")
    ben.add_argument("--outdir", required=True)
    ben.set_defaults(func=_cmd_benchmark)

    grd = sub.add_parser("grid", help="AUC over a length x fraction grid")
    grd.add_argument("--seed", type=int, required=True)
    grd.add_argument("--lengths", required=True,
                     help="comma-separated series lengths")
    grd.add_argument("--fractions", required=True,
                     help="comma-separated observed fractions")
    grd.add_argument("--instances", type=int, default=120)
    grd.add_argument("--n-windows", type=int, default=20)
    grd.add_argument("--delta-t", type=float, default=0.1)
    grd.add_argument("--threads", type=int, default=1)
    grd.add_argument("--indicators", default=None)
    grd.add_argument("--outdir", required=True)
    grd.set_defaults(func=_cmd_grid)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError, json.JSONDecodeError, ValueError) as exc:
        print(f"rednoise: configuration/input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"rednoise: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (EstimationError, AnalysisError) as exc:
        print(f"rednoise: estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
