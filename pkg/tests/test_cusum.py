import math

import numpy as np
import pytest

from nemesys._rng import stream
from nemesys.detect import (
    CusumDetector,
    CusumState,
    calibrate_threshold,
    cusum_update,
    measure_alarm_rate,
    measure_detection_delay,
)
from nemesys.detect.cusum import _alarm_count
from nemesys.errors import InsufficientSamples, NonPositiveObservation


def test_update_matches_hand_computation():
    state = CusumState(lambda0=1.0, lambda1=2.0, threshold_h=5.0)
    state, verdict = cusum_update(state, 0.1)
    assert state.s == pytest.approx(math.log(2.0) - 0.1)
    assert not verdict.alarmed
    assert verdict.score == pytest.approx(state.s / 5.0)


def test_negative_increment_clamps_at_zero():
    state = CusumState(lambda0=1.0, lambda1=2.0, threshold_h=5.0)
    state, _ = cusum_update(state, 2.0)  # ln2 - 2 < 0
    assert state.s == 0.0


def test_threshold_crossing_resets_statistic():
    state = CusumState(lambda0=1.0, lambda1=2.0, threshold_h=5.0, s=4.9)
    state, verdict = cusum_update(state, 0.01)  # increment ~ 0.683
    assert verdict.alarmed
    assert state.s == 0.0
    assert state.alarmed_at == 1


def test_nonpositive_observation_rejected():
    state = CusumState(lambda0=1.0, lambda1=2.0, threshold_h=5.0)
    with pytest.raises(NonPositiveObservation):
        cusum_update(state, 0.0)


def test_statistic_never_negative_over_random_stream():
    state = CusumState(lambda0=1.0, lambda1=3.0, threshold_h=4.0)
    rng = stream(3, "obs")
    for _ in range(5000):
        state, _ = cusum_update(state, float(rng.exponential(1.0)))
        assert state.s >= 0.0


def test_alarm_count_matches_scalar_recursion():
    rng = stream(5, "incs")
    incs = rng.normal(-0.3, 1.0, size=4000)

    def brute(h):
        s, count = 0.0, 0
        for a in incs:
            s = max(0.0, s + a)
            if s >= h:
                count += 1
                s = 0.0
        return count

    for h in (0.25, 1.0, 2.5, 6.0, 20.0):
        assert _alarm_count(incs, h) == brute(h)


def test_calibration_deterministic_per_seed():
    a = calibrate_threshold(1.0, 10.0, 1e-3, 50_000, seed=2)
    b = calibrate_threshold(1.0, 10.0, 1e-3, 50_000, seed=2)
    assert a == b
    assert a > 0


def test_calibration_target_range_enforced():
    with pytest.raises(ValueError):
        calibrate_threshold(1.0, 10.0, 0.5, 100_000, seed=1)
    with pytest.raises(InsufficientSamples):
        calibrate_threshold(1.0, 10.0, 1e-4, 1000, seed=1)


def test_calibrated_rate_verified_with_fresh_seed():
    target = 1e-3
    h = calibrate_threshold(1.0, 10.0, target, 100_000, seed=7)
    rate = measure_alarm_rate(1.0, 10.0, h, 200_000, seed=1234)
    assert rate <= 2.0 * target


def test_detection_delay_small_under_attack_rate():
    h = calibrate_threshold(1.0, 10.0, 1e-4, 100_000, seed=7)
    delay = measure_detection_delay(1.0, 10.0, h, n_trials=300, seed=9)
    assert delay <= 10.0


def test_detector_estimator_fit_and_stream():
    rng = stream(21, "clean")
    clean_gaps = rng.exponential(0.5, size=2000)  # lambda0 = 2/s
    det = CusumDetector(lambda1_ratio=10.0, target_far=1e-3,
                        calib_samples=20_000, seed=0)
    det.fit(clean_gaps)
    assert det.state_.lambda0 == pytest.approx(2.0, rel=0.1)
    verdicts = det.process(rng.exponential(0.5, size=500))
    assert not any(v.alarmed for v in verdicts[:50])
    # attack-rate gaps: ten times faster
    attack = det.process(rng.exponential(0.05, size=100))
    assert any(v.alarmed for v in attack)


def test_detector_get_params():
    det = CusumDetector(lambda1_ratio=8.0, seed=3)
    params = det.get_params()
    assert params["lambda1_ratio"] == 8.0
    assert CusumDetector(**params).get_params() == params
