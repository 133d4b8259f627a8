"""ROC/AUC machinery and the randomized paired true/null protocol."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rednoise.benchmark import (
    BenchmarkConfig,
    INDICATORS,
    LAMBDA0_RANGE,
    NOISE_PARAM_RANGE,
    draw_instance,
    grid_benchmark,
    mann_whitney_auc,
    roc_curve,
    run_benchmark,
)
from rednoise.errors import ConfigError

TINY = BenchmarkConfig(
    n_instances=3,
    total_time=1400.0,
    n_windows=4,
    window_len=350,
    indicators=("var", "ac1"),
)


# ---------------------------------------------------------------------------
# ROC curve on hand-enumerated data


def test_roc_hand_case():
    roc = roc_curve([0.8, 0.2], [0.5])
    np.testing.assert_array_equal(
        roc.thresholds, [np.inf, 0.8, 0.5, 0.2, 0.0, -np.inf])
    # strict alarm rule tau > h: at h = 0.8 nothing alarms yet
    np.testing.assert_allclose(roc.tpr, [0.0, 0.0, 0.5, 0.5, 1.0, 1.0])
    np.testing.assert_allclose(roc.fpr, [0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
    assert roc.auc == pytest.approx(0.5)
    assert roc.auc_mann_whitney == pytest.approx(0.5)
    assert roc.zero_threshold == (1.0, 1.0)


def test_roc_perfect_separation():
    roc = roc_curve([0.9, 0.8], [-0.1, 0.1])
    assert roc.auc == pytest.approx(1.0)
    assert roc.zero_threshold == (0.5, 1.0)


def test_roc_endpoints_and_monotonicity():
    rng = np.random.default_rng(2)
    roc = roc_curve(rng.normal(0.3, 0.2, 40), rng.normal(0.0, 0.2, 40))
    assert (roc.fpr[0], roc.tpr[0]) == (0.0, 0.0)
    assert (roc.fpr[-1], roc.tpr[-1]) == (1.0, 1.0)
    assert np.all(np.diff(roc.fpr) >= 0)
    assert np.all(np.diff(roc.tpr) >= 0)


def test_roc_with_ties():
    roc = roc_curve([0.5], [0.5])
    assert roc.auc == pytest.approx(0.5)
    assert roc.auc_mann_whitney == pytest.approx(0.5)


def test_roc_drops_missing_entries():
    roc = roc_curve([0.8, None, 0.2], [None, 0.5])
    assert roc.n_true == 2 and roc.n_null == 1
    with pytest.raises(ConfigError):
        roc_curve([None], [0.5])


@settings(max_examples=80, deadline=None)
@given(
    true=st.lists(st.floats(min_value=-1, max_value=1, allow_nan=False),
                  min_size=1, max_size=25),
    null=st.lists(st.floats(min_value=-1, max_value=1, allow_nan=False),
                  min_size=1, max_size=25),
)
def test_trapezoid_auc_equals_mann_whitney(true, null):
    roc = roc_curve(true, null)
    assert roc.auc == pytest.approx(mann_whitney_auc(true, null), abs=1e-12)


# ---------------------------------------------------------------------------
# configuration and draws


def test_benchmark_config_validation():
    with pytest.raises(ConfigError):
        BenchmarkConfig(n_instances=0)
    with pytest.raises(ConfigError):
        BenchmarkConfig(fraction=1.5)
    with pytest.raises(ConfigError):
        BenchmarkConfig(n_windows=30, window_len=700)  # 21000 > 14000
    with pytest.raises(ConfigError):
        BenchmarkConfig(fraction=0.05)  # rounds to one usable window


def test_used_windows_rounding():
    assert BenchmarkConfig(fraction=1.0).used_windows == 20
    assert BenchmarkConfig(fraction=0.6).used_windows == 12
    assert BenchmarkConfig(fraction=0.4).used_windows == 8
    assert BenchmarkConfig(fraction=0.6).duration == pytest.approx(8400.0)


def test_draw_instance_ranges_and_determinism():
    draws = [draw_instance(99, i) for i in range(50)]
    assert draws[7] == draw_instance(99, 7)
    assert draws[7] != draw_instance(98, 7)
    for d in draws:
        assert LAMBDA0_RANGE[0] <= d.lambda0 <= LAMBDA0_RANGE[1]
        for value in (d.theta0, d.thetaT, d.kappa0, d.kappaT):
            assert NOISE_PARAM_RANGE[0] <= value <= NOISE_PARAM_RANGE[1]


# ---------------------------------------------------------------------------
# the paired protocol at toy scale


@pytest.fixture(scope="module")
def tiny_result():
    return run_benchmark(TINY, master_seed=606, n_workers=1)


def test_run_benchmark_shape(tiny_result):
    for name in TINY.indicators:
        assert len(tiny_result.taus_true[name]) == TINY.n_instances
        assert len(tiny_result.taus_null[name]) == TINY.n_instances
        roc = tiny_result.roc(name)
        assert roc.auc == pytest.approx(roc.auc_mann_whitney, abs=1e-12)


def test_run_benchmark_deterministic(tiny_result):
    again = run_benchmark(TINY, master_seed=606, n_workers=1)
    assert again.taus_true == tiny_result.taus_true
    assert again.taus_null == tiny_result.taus_null


def test_run_benchmark_worker_count_independence(tiny_result):
    parallel = run_benchmark(TINY, master_seed=606, n_workers=2)
    assert parallel.taus_true == tiny_result.taus_true
    assert parallel.taus_null == tiny_result.taus_null


def test_run_benchmark_seed_sensitivity(tiny_result):
    other = run_benchmark(TINY, master_seed=607, n_workers=1)
    assert other.taus_true != tiny_result.taus_true


# ---------------------------------------------------------------------------
# grid


def test_grid_cell_layout():
    cells = grid_benchmark([1400.0], [0.5, 1.0], TINY, master_seed=11)
    assert len(cells) == 2 * len(TINY.indicators)
    for cell in cells:
        assert cell.indicator in TINY.indicators
        assert cell.auc is None or 0.0 <= cell.auc <= 1.0
        assert cell.n_effective <= TINY.n_instances


def test_grid_marks_infeasible_cells():
    # fraction 0.25 of 4 windows rounds to a single usable window
    cells = grid_benchmark([1400.0], [0.25], TINY, master_seed=11)
    assert all(cell.auc is None and cell.n_effective == 0 for cell in cells)


def test_default_indicator_set():
    assert INDICATORS == ("var", "ac1", "phi", "neg_lambda_acs", "neg_lambda_psd")
