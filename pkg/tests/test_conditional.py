import numpy as np
import pytest

from conftest import make_set
from etcal import (
    INF,
    CalibConfig,
    accumulated_gap,
    calibrate_conditional,
    calibrate_split,
    empirical_marginal_gap,
    screen_candidates,
    suffix_config,
    test_candidates,
)
from etcal.conditional import EMPTY, NOT_REJECTED, split_calibration
from etcal.domain import all_inf, threshold_vector

# screening examples
SINGLE = make_set(((0.9, 0.9), (0, 1)))
SCREEN_AB = make_set(((0.6, 0.9), (0, 1)), ((0.8, 0.9), (1, 1)))
# testing examples
TEST_AB = make_set(((0.6, 0.9), (1, 1)), ((0.4, 0.9), (1, 1)))
TEST_A = make_set(((0.6, 0.9), (0, 1)))


def test_accumulated_gap_examples():
    assert accumulated_gap(TEST_AB, threshold_vector([0.5, 0.0]), 1) == 0.0
    assert accumulated_gap(TEST_AB, all_inf(2), 1) is None
    thr = threshold_vector([0.0, 0.5])
    assert accumulated_gap(SCREEN_AB, thr, 2) == empirical_marginal_gap(SCREEN_AB, thr) == 0.5
    with pytest.raises(ValueError):
        accumulated_gap(TEST_AB, all_inf(2), 3)


def test_screen_single_trace():
    eta = screen_candidates(SINGLE, CalibConfig(alpha=0.1, grid_delta=0.5))
    assert eta.tolist() == [INF, 0.0]


def test_screen_two_traces():
    eta = screen_candidates(SCREEN_AB, CalibConfig(alpha=0.4, grid_delta=0.5))
    assert eta.tolist() == [INF, 0.0]


def test_screen_all_correct():
    ts = make_set(((0.1, 0.5, 0.2), (1, 1, 1)), ((0.7, 0.2, 0.9), (1, 1, 1)))
    assert screen_candidates(ts, CalibConfig(alpha=0.1)).tolist() == [0.0, 0.0, 0.0]


def test_suffix_config_examples():
    assert suffix_config([0.1, 0.2, 0.3], 3).tolist() == [INF, INF, 0.3]
    assert suffix_config([0.1, 0.2, 0.3], 1).tolist() == [0.1, 0.2, 0.3]
    assert suffix_config([0.3, 0.7, INF], 2).tolist() == [INF, 0.7, INF]


def test_testing_accepts_full_candidate():
    res = test_candidates(TEST_AB, [0.5, 0.0], CalibConfig(alpha=0.5, delta=0.5))
    assert res.lambda_hat.tolist() == [0.5, 0.0]
    assert res.t_star == 1
    t2, t1 = res.test_log
    assert [(s.t_prime, s.size, s.k, s.p_value) for s in t2.tests] == [(2, 2, 0, 0.25)]
    assert [(s.t_prime, s.size, s.k, s.p_value) for s in t1.tests] == [(1, 1, 0, 0.5), (2, 2, 0, 0.25)]
    assert t1.accepted and t2.accepted


def test_testing_all_inf_candidate():
    ts = make_set(*[((0.5, 0.5, 0.5), (0, 1, 1))] * 30)
    res = test_candidates(ts, all_inf(3), CalibConfig(alpha=0.2, delta=0.01))
    # (0.8)^30 ~ 0.0012 <= 0.01: t=3 passes, t=2 finds nobody halting at 2
    assert res.lambda_hat.tolist() == [INF] * 3
    assert res.t_star == 3
    assert res.test_log[-1].break_reason == EMPTY
    res = test_candidates(ts, all_inf(3), CalibConfig(alpha=0.1, delta=0.01))
    assert res.lambda_hat.tolist() == [INF] * 3
    assert res.t_star == 4
    assert res.test_log[-1].break_reason == NOT_REJECTED


def test_testing_fails_immediately():
    res = test_candidates(TEST_A, [0.5, 0.9], CalibConfig(alpha=0.5, delta=0.3))
    assert res.lambda_hat.tolist() == [INF, INF]
    assert res.t_star == 3
    (step,) = res.test_log
    assert step.break_reason == NOT_REJECTED
    assert [(s.size, s.k, s.p_value) for s in step.tests] == [(1, 0, 0.5)]


def test_composite_fixed_split():
    cfg = CalibConfig(alpha=0.5, delta=0.5, grid_delta=0.5)
    # stage 1 on SINGLE: t=1 risk is 1 for xi in {0, 0.5}, xi=1 empties I; t=2 xi=0 gives 0
    # stage 2 on TEST_AB: (inf, 0) passes with p=0.25; at t=1 nobody halts by t'=1
    res = calibrate_split(SINGLE, TEST_AB, cfg)
    assert res.eta_hat.tolist() == [INF, 0.0]
    assert res.lambda_hat.tolist() == [INF, 0.0]
    assert res.t_star == 2
    assert res.test_log[-1].break_reason == EMPTY
    # stage 1 on SCREEN_AB with alpha=0.5: risk 0.5 at xi=0 for t=1 and t=2
    # stage 2 on TEST_AB: both configurations pass with p=0.25
    res = calibrate_split(SCREEN_AB, TEST_AB, cfg)
    assert res.eta_hat.tolist() == [0.0, 0.0]
    assert res.lambda_hat.tolist() == [0.0, 0.0]
    assert res.t_star == 1


def test_split_sizes_and_determinism():
    cfg = CalibConfig(split_fraction=0.5, seed=11)
    a, b = split_calibration(10, cfg)
    assert len(a) == len(b) == 5
    assert sorted(np.concatenate([a, b]).tolist()) == list(range(10))
    rng = np.random.default_rng(3)
    from etcal import TraceSet

    ts = TraceSet(rng.random((40, 4)), rng.integers(0, 2, (40, 4)))
    r1 = calibrate_conditional(ts, cfg)
    r2 = calibrate_conditional(ts, cfg)
    assert r1.lambda_hat.tolist() == r2.lambda_hat.tolist()
    assert r1.eta_hat.tolist() == r2.eta_hat.tolist()
    assert r1.cal1_indices.tolist() == r2.cal1_indices.tolist()
    assert r1.test_log == r2.test_log


def test_split_errors():
    with pytest.raises(ValueError):
        calibrate_conditional(SINGLE, CalibConfig())
    with pytest.raises(ValueError):
        split_calibration(3, CalibConfig(split_fraction=0.1))


def test_larger_alpha_can_lengthen_halts():
    # a larger alpha lowers the first screened threshold, the t=1 suffix then
    # fails stage 2, and the rule falls back to halting only at t=2
    cal1 = make_set(
        ((0.2, 0.2), (0, 1)), ((0.2, 1.0), (0, 1)), ((0.6, 0.6), (0, 0)),
        ((0.2, 1.0), (0, 0)), ((1.0, 1.0), (1, 0)), ((0.2, 0.6), (0, 1)),
    )
    cal2 = make_set(
        ((0.2, 0.6), (0, 1)), ((0.2, 0.2), (0, 1)), ((1.0, 0.6), (0, 0)),
        ((0.2, 1.0), (0, 0)), ((0.2, 0.2), (0, 1)), ((1.0, 0.2), (0, 0)),
    )
    mid = calibrate_split(cal1, cal2, CalibConfig(alpha=0.3, delta=0.5, grid_delta=0.5))
    high = calibrate_split(cal1, cal2, CalibConfig(alpha=0.5, delta=0.5, grid_delta=0.5))
    assert mid.eta_hat.tolist() == [0.5, 0.0] and mid.lambda_hat.tolist() == [0.5, 0.0]
    assert high.eta_hat.tolist() == [0.0, 0.0] and high.lambda_hat.tolist() == [INF, 0.0]
