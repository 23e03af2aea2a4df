"""Sequential likelihood-ratio change detection on inter-event times.

The observation model is exponential: normal traffic at rate lambda0,
attack traffic at lambda1 > lambda0. Each observation adds the
log-likelihood ratio ``ln(l1/l0) - (l1 - l0) * x`` to a statistic clamped
at zero; crossing the threshold raises an alarm and resets the statistic.
The threshold is calibrated by Monte Carlo under the normal model.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from sklearn.base import BaseEstimator

from .._rng import stream
from ..errors import InsufficientData, InsufficientSamples, NonPositiveObservation
from ..features import Scope
from ..validation import as_float_vector
from .verdicts import DetectionVerdict, DetectorName


@dataclass(frozen=True)
class CusumState:
    lambda0: float  # events/second under normal traffic
    lambda1: float  # events/second under attack
    threshold_h: float  # log-likelihood units
    s: float = 0.0
    n_obs: int = 0
    alarmed_at: Optional[int] = None

    def __post_init__(self):
        if not (self.lambda1 > self.lambda0 > 0.0):
            raise ValueError("need lambda1 > lambda0 > 0")
        if self.threshold_h <= 0.0:
            raise ValueError("threshold_h must be > 0")
        if self.s < 0.0:
            raise ValueError("statistic must stay >= 0")


def cusum_update(
    state: CusumState,
    x: float,
    ts: float = 0.0,
    scope: Scope = Scope.network(),
) -> Tuple[CusumState, DetectionVerdict]:
    """Fold one inter-event time into the statistic; alarm resets it."""
    if x <= 0.0:
        raise NonPositiveObservation(f"inter-event time must be > 0, got {x}")
    increment = math.log(state.lambda1 / state.lambda0) - (state.lambda1 - state.lambda0) * x
    s_new = max(0.0, state.s + increment)
    alarmed = s_new >= state.threshold_h
    n_obs = state.n_obs + 1
    verdict = DetectionVerdict(
        ts=ts,
        scope=scope,
        detector=DetectorName.CUSUM,
        score=min(1.0, s_new / state.threshold_h),
        alarmed=alarmed,
    )
    new_state = replace(
        state,
        s=0.0 if alarmed else s_new,
        n_obs=n_obs,
        alarmed_at=n_obs if alarmed else state.alarmed_at,
    )
    return new_state, verdict


def _alarm_count(increments: np.ndarray, h: float, stop_above: Optional[int] = None,
                 chunk: int = 8192) -> int:
    """Alarms raised by the clamped recursion with reset, counted in vector
    chunks via the Lindley identity s_t = max(c_t + s0, c_t - min_{j<=t} c_j)."""
    count = 0
    s0 = 0.0
    n = increments.size
    pos = 0
    while pos < n:
        block = increments[pos: pos + chunk]
        offset = 0
        while offset < block.size:
            seg = block[offset:]
            c = np.cumsum(seg)
            path = np.maximum(c + s0, c - np.minimum.accumulate(c))
            hits = path >= h
            if not hits.any():
                s0 = float(path[-1])
                break
            first = int(np.argmax(hits))
            count += 1
            if stop_above is not None and count > stop_above:
                return count
            s0 = 0.0
            offset += first + 1
        pos += chunk
    return count


_GRID = np.round(np.arange(0.5, 50.0 + 1e-9, 0.5), 6)


def calibrate_threshold(
    lambda0: float,
    lambda1: float,
    target_false_alarm_rate: float,
    n_mc: int,
    seed: int,
) -> float:
    """Smallest grid threshold whose Monte Carlo false-alarm rate under the
    normal model stays at or below the target. Deterministic per seed."""
    if not (0.0 < target_false_alarm_rate <= 0.1):
        raise ValueError(f"target rate {target_false_alarm_rate} outside (0, 0.1]")
    if not (lambda1 > lambda0 > 0.0):
        raise ValueError("need lambda1 > lambda0 > 0")
    if n_mc < 10.0 / target_false_alarm_rate:
        raise InsufficientSamples(
            f"n_mc={n_mc} too small for target {target_false_alarm_rate} "
            f"(need >= {int(10.0 / target_false_alarm_rate)})"
        )
    rng = stream(seed, "cusum-calibration")
    x = rng.exponential(1.0 / lambda0, size=int(n_mc))
    increments = math.log(lambda1 / lambda0) - (lambda1 - lambda0) * x
    budget = int(math.floor(target_false_alarm_rate * n_mc))
    for h in _GRID:
        if _alarm_count(increments, float(h), stop_above=budget) <= budget:
            return float(h)
    raise InsufficientSamples("no grid threshold met the target rate")


def measure_alarm_rate(lambda0: float, lambda1: float, h: float, n_obs: int, seed: int) -> float:
    """Independent Monte Carlo false-alarm rate at a given threshold."""
    rng = stream(seed, "cusum-verify")
    x = rng.exponential(1.0 / lambda0, size=int(n_obs))
    increments = math.log(lambda1 / lambda0) - (lambda1 - lambda0) * x
    return _alarm_count(increments, h) / float(n_obs)


def measure_detection_delay(
    lambda0: float, lambda1: float, h: float, n_trials: int, seed: int,
    max_obs: int = 100_000,
) -> float:
    """Mean observations to alarm when the stream runs at the attack rate."""
    rng = stream(seed, "cusum-delay")
    drift = math.log(lambda1 / lambda0)
    scale = lambda1 - lambda0
    delays = np.empty(n_trials)
    for trial in range(n_trials):
        s = 0.0
        for k in range(1, max_obs + 1):
            s = max(0.0, s + drift - scale * float(rng.exponential(1.0 / lambda1)))
            if s >= h:
                delays[trial] = k
                break
        else:
            delays[trial] = max_obs
    return float(delays.mean())


class CusumDetector(BaseEstimator):
    """Estimator wrapper: fit the normal rate from clean inter-event times,
    calibrate the threshold, then score a stream observation by observation."""

    def __init__(self, lambda0=None, lambda1_ratio=10.0, threshold=None,
                 target_far=1e-4, calib_samples=200_000, seed=0):
        self.lambda0 = lambda0
        self.lambda1_ratio = lambda1_ratio
        self.threshold = threshold
        self.target_far = target_far
        self.calib_samples = calib_samples
        self.seed = seed

    def fit(self, X, y=None):
        """X: inter-event times from an attack-free window."""
        if self.lambda0 is not None:
            lam0 = float(self.lambda0)
        else:
            x = as_float_vector(X, "inter-event times")
            if x.size < 2:
                raise InsufficientData("need at least 2 inter-event times to estimate lambda0")
            if np.any(x <= 0):
                raise NonPositiveObservation("inter-event times must be > 0")
            lam0 = 1.0 / float(x.mean())
        lam1 = lam0 * float(self.lambda1_ratio)
        if self.threshold is not None:
            h = float(self.threshold)
        else:
            h = calibrate_threshold(lam0, lam1, self.target_far,
                                    int(self.calib_samples), self.seed)
        self.state_ = CusumState(lambda0=lam0, lambda1=lam1, threshold_h=h)
        return self

    def update(self, x: float, ts: float = 0.0, scope: Scope = Scope.network()):
        self.state_, verdict = cusum_update(self.state_, x, ts=ts, scope=scope)
        return verdict

    def process(self, xs, ts0: float = 0.0):
        verdicts = []
        t = ts0
        for x in xs:
            t += x
            verdicts.append(self.update(x, ts=t))
        return verdicts

    def reset(self):
        self.state_ = replace(self.state_, s=0.0, n_obs=0, alarmed_at=None)
        return self
