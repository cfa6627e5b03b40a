"""Recursive least-squares exponent estimation against batch solutions."""

import math

import numpy as np
import pytest

from conftest import DT, naive_first_extremum, two_machine_model
from lyapstab.errors import SingularInitError
from lyapstab.ingest import EventMeta, align
from lyapstab.mle import (EPS_DISTANCE, estimate_stream, iter_mle,
                          log_distance, rls_init, rls_update)
from lyapstab.network import FaultSpec
from lyapstab.pairs import SdgpTrace
from lyapstab.simulator import simulate
from lyapstab.swings import EstimatorParams, SwingPattern


def batch_fit(times, values):
    """Normal-equations oracle for the straight-line fit."""
    X = np.column_stack([np.asarray(times, float), np.ones(len(times))])
    return np.linalg.solve(X.T @ X, X.T @ np.asarray(values, float))


def run_rls(times, values):
    state = rls_init(values[0], values[1], times[0], times[1])
    for t, y in zip(times[2:], values[2:]):
        rls_update(state, y, t)
    return state


def exp_pair_trace(lam, theta0=1.0, duration=2.0, noise=0.0, seed=0):
    t = np.arange(int(duration / DT) + 1) * DT
    theta = theta0 * np.exp(lam * t)
    if noise:
        theta = theta + np.random.default_rng(seed).normal(0.0, noise, len(t))
    return SdgpTrace(severe="A", least="B", rel_angle=theta,
                     rel_speed=np.gradient(theta, DT), dt=DT)


# ---------------------------------------------------------------------------
# log distance
# ---------------------------------------------------------------------------

def test_log_distance_values():
    assert log_distance(1.0) == 0.0
    assert log_distance(0.0) == pytest.approx(math.log(EPS_DISTANCE))
    assert log_distance(math.e ** 2) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(ValueError):
        log_distance(-1.0)


# ---------------------------------------------------------------------------
# two-point initialisation
# ---------------------------------------------------------------------------

def test_init_exact_line():
    state = rls_init(3.0, 5.0, 1.0, 2.0)
    assert state.lambda_hat == pytest.approx(2.0)
    assert state.c_hat == pytest.approx(1.0)
    assert state.k == 1


def test_init_flat_line():
    state = rls_init(7.0, 7.0, 0.25, 1.75)
    assert state.lambda_hat == 0.0
    assert state.c_hat == 7.0


def test_init_covariance_matches_inverse_oracle():
    rng = np.random.default_rng(7)
    for _ in range(50):
        t0, gap = rng.uniform(-3, 3), rng.uniform(0.1, 4.0)
        t1 = t0 + gap
        L0, L1 = rng.normal(size=2)
        state = rls_init(L0, L1, t0, t1)
        X = np.array([[t0, 1.0], [t1, 1.0]])
        oracle = np.linalg.inv(X.T @ X)
        scale = np.abs(oracle).max()
        assert np.abs(state.P - oracle).max() < 1e-12 * max(scale, 1.0)


def test_init_rejects_equal_times():
    with pytest.raises(SingularInitError):
        rls_init(1.0, 2.0, 0.5, 0.5)


# ---------------------------------------------------------------------------
# recursive updates
# ---------------------------------------------------------------------------

def test_exact_line_is_fixed_point():
    times = np.arange(30) * 0.1
    values = 2.0 * times + 3.0
    state = rls_init(values[0], values[1], times[0], times[1])
    for t, y in zip(times[2:], values[2:]):
        rls_update(state, y, t)
        assert state.lambda_hat == pytest.approx(2.0, abs=1e-10)
        assert state.c_hat == pytest.approx(3.0, abs=1e-10)


def test_zero_innovation_leaves_estimates():
    state = run_rls(np.array([0.0, 0.1, 0.2, 0.35]),
                    np.array([1.0, 0.8, 0.95, 1.1]))
    lam, c = state.lambda_hat, state.c_hat
    t_new = 0.5
    rls_update(state, lam * t_new + c, t_new)
    assert state.lambda_hat == pytest.approx(lam, abs=1e-12)
    assert state.c_hat == pytest.approx(c, abs=1e-12)


def test_recursive_matches_batch_on_noisy_data():
    rng = np.random.default_rng(123)
    for _ in range(100):
        n = rng.integers(3, 120)
        times = np.sort(rng.uniform(0.0, 5.0, n))
        times += np.arange(n) * 1e-6  # strictly increasing
        values = rng.normal(0.0, 1.0, n) + 0.7 * times
        state = run_rls(times, values)
        lam, c = batch_fit(times, values)
        assert np.allclose([state.lambda_hat, state.c_hat], [lam, c],
                           rtol=1e-9, atol=1e-12)


def test_covariance_stays_symmetric_positive_definite():
    rng = np.random.default_rng(5)
    times = np.cumsum(rng.uniform(0.5 * DT, 3 * DT, 10_000))
    values = 0.3 * times + rng.normal(0.0, 0.2, len(times))
    state = rls_init(values[0], values[1], times[0], times[1])
    for i, (t, y) in enumerate(zip(times[2:], values[2:])):
        rls_update(state, y, t)
        if i % 251 == 0:
            assert np.abs(state.P - state.P.T).max() < 1e-9
            assert np.all(np.linalg.eigvalsh(state.P) > 0.0)
    assert np.all(np.linalg.eigvalsh(state.P) > 0.0)


def test_time_shift_changes_only_intercept():
    rng = np.random.default_rng(11)
    times = np.sort(rng.uniform(0.0, 4.0, 60))
    values = -0.4 * times + rng.normal(0.0, 0.1, 60)
    lam0 = run_rls(times, values).lambda_hat
    lam1 = run_rls(times + 17.0, values).lambda_hat
    assert lam1 == pytest.approx(lam0, rel=1e-9, abs=1e-12)


def test_distance_scaling_changes_only_intercept():
    rng = np.random.default_rng(12)
    times = np.sort(rng.uniform(0.0, 4.0, 60))
    dists = np.exp(rng.normal(0.0, 0.5, 60))
    base = run_rls(times, np.log(dists))
    scaled = run_rls(times, np.log(50.0 * dists))
    assert scaled.lambda_hat == pytest.approx(base.lambda_hat, rel=1e-9,
                                              abs=1e-12)
    assert scaled.c_hat == pytest.approx(base.c_hat + math.log(50.0), rel=1e-9)


def test_update_guards():
    state = rls_init(0.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        rls_update(state, math.nan, 2.0)
    with pytest.raises(ValueError):
        rls_update(state, 0.5, 1.0)  # time does not advance


# ---------------------------------------------------------------------------
# streaming over pair traces
# ---------------------------------------------------------------------------

def test_exponential_separation_recovers_exponent():
    lam = 1.5
    params = EstimatorParams(w=12, m_n=12, dt=DT, pattern=SwingPattern.I,
                             decided_at=0)
    series = estimate_stream(exp_pair_trace(lam), params)
    after_60 = series.lambdas[59:]
    assert np.abs(after_60 - lam).max() / lam < 0.01


def test_ramp_angle_gives_zero_exponent():
    t = np.arange(0, 241) * DT
    trace = SdgpTrace(severe="A", least="B", rel_angle=4.0 * t,
                      rel_speed=np.full_like(t, 4.0), dt=DT)
    params = EstimatorParams(w=6, m_n=6, dt=DT, pattern=SwingPattern.I,
                             decided_at=0)
    series = estimate_stream(trace, params)
    assert np.abs(series.lambdas).max() < 1e-8


def test_stream_times_and_first_emission():
    params = EstimatorParams(w=10, m_n=25, dt=DT, pattern=SwingPattern.III,
                             decided_at=0)
    series = estimate_stream(exp_pair_trace(0.5, duration=1.0), params)
    assert series.times[0] == pytest.approx((25 + 1) * DT)
    assert np.all(np.diff(series.times) > 0)
    assert len(series.times) == len(series.lambdas)


def test_stream_requires_enough_samples():
    trace = exp_pair_trace(0.5, duration=0.1)  # 13 samples
    params = EstimatorParams(w=10, m_n=30, dt=DT, pattern=SwingPattern.III,
                             decided_at=0)
    with pytest.raises(ValueError, match="angle samples"):
        next(iter_mle(trace, params))


def test_undamped_two_machine_dips_then_peaks():
    # oscillating separation: the exponent estimate first drops well below
    # its starting value, then recovers to a confirmed local maximum
    model = two_machine_model(d1=0.0, d2=0.0)
    fault = FaultSpec(bus="3", t_fault=0.1, t_clear=0.18)
    traces = simulate(model, fault, dt=DT, horizon=8.0)
    meta = EventMeta(t_fault=0.1, t_clear=0.18)
    ds = align(traces, meta)
    rel = ds.angles[0] - ds.angles[1]
    spd = ds.speeds[0] - ds.speeds[1]
    if spd[0] < 0:
        rel, spd = -rel, -spd
    trace = SdgpTrace(severe="G1", least="G2", rel_angle=rel, rel_speed=spd,
                      dt=DT)
    from lyapstab.swings import classify, distance_series, find_mle_start
    decision = classify(spd, DT)
    m_n = find_mle_start(decision.pattern, decision.w,
                         distance_series(rel, decision.w))
    params = EstimatorParams(w=decision.w, m_n=m_n, dt=DT,
                             pattern=decision.pattern,
                             decided_at=decision.decided_at)
    series = estimate_stream(trace, params)
    dipped = np.flatnonzero(series.lambdas < series.lambdas[0])
    assert dipped.size > 0
    peak_j = naive_first_extremum(series.lambdas, sign=+1)
    assert peak_j is not None
    assert peak_j > dipped[0]
