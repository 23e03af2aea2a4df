"""End-to-end detection over a simulated or replayed trace.

The pipeline estimates the normal signaling rate from an attack-free
training prefix, calibrates the change detector, then walks fixed-width
windows: the signaling stream feeds one CUSUM channel, premium billing
events feed another, and an optional trained neural model scores the
window's feature vector. Per window, the verdicts are fused into at most
one alert.
"""

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from ..errors import InsufficientData, MalformedConfig
from ..features import Scope, extract_features, windowize
from ..netsim.types import ChargingDataRecord, Service, SignalingEvent
from .cusum import CusumState, calibrate_threshold, cusum_update
from .rnn import load_model, rnn_fixed_point
from .rules import ClassifyConfig, FusionPolicy, fuse
from .verdicts import Alert, DetectionVerdict, DetectorName

# Simultaneous events (e.g. synchronized botnet pings) would produce zero
# inter-event times; they clamp to this floor, which reads as an extreme
# rate spike rather than breaking the observation model.
MIN_GAP_SECONDS = 1e-6


@dataclass(frozen=True)
class DetectorConfig:
    window_width: float = 10.0
    stride: float = 10.0
    training_seconds: float = 300.0
    lambda0: Optional[float] = None  # estimated from the training prefix when None
    lambda1_ratio: float = 10.0
    threshold: Optional[float] = None  # calibrated when None
    far_target: float = 1e-4
    calib_samples: int = 200_000
    seed: int = 0
    monitor_premium: bool = True
    premium_lambda0_floor: float = 1.0 / 3600.0  # assume <= one premium msg/hour when clean
    rnn_model_path: Optional[str] = None
    classify: ClassifyConfig = field(default_factory=ClassifyConfig)

    def fusion_policy(self) -> FusionPolicy:
        return FusionPolicy(classify_config=self.classify)


def load_detector_config(path) -> DetectorConfig:
    try:
        doc = _toml.loads(Path(path).read_text(encoding="utf-8"))
    except (_toml.TOMLDecodeError, OSError) as exc:
        raise MalformedConfig(f"detector config {path}: {exc}") from None
    detector = doc.get("detector", {})
    classify_doc = doc.get("classify", {})
    known = set(ClassifyConfig.__dataclass_fields__)
    extra = set(classify_doc) - known
    if extra:
        raise MalformedConfig(f"classify: unknown fields {sorted(extra)}")
    known_det = {f for f in DetectorConfig.__dataclass_fields__ if f != "classify"}
    extra = set(detector) - known_det
    if extra:
        raise MalformedConfig(f"detector: unknown fields {sorted(extra)}")
    return DetectorConfig(**detector, classify=ClassifyConfig(**classify_doc))


def _estimate_rate(times: Sequence[float], horizon: float) -> float:
    if len(times) < 2:
        raise InsufficientData(
            f"need >= 2 events in the {horizon}s training prefix to estimate lambda0"
        )
    span = times[-1] - times[0]
    if span <= 0:
        raise InsufficientData("training events are simultaneous; cannot estimate a rate")
    return (len(times) - 1) / span


class _Channel:
    """One CUSUM stream plus the bookkeeping to window its verdicts."""

    def __init__(self, state: CusumState, last_ts: float):
        self.state = state
        self.last_ts = last_ts
        self.window_alarmed = False
        self.window_score = 0.0
        self.first_alarm_ts: Optional[float] = None

    def observe(self, ts: float, scope: Scope) -> None:
        gap = max(ts - self.last_ts, MIN_GAP_SECONDS)
        self.last_ts = ts
        self.state, verdict = cusum_update(self.state, gap, ts=ts, scope=scope)
        self.window_score = max(self.window_score, verdict.score)
        if verdict.alarmed and self.first_alarm_ts is None:
            self.first_alarm_ts = ts
        self.window_alarmed = self.window_alarmed or verdict.alarmed

    def close_window(self, window_end: float, scope: Scope) -> DetectionVerdict:
        verdict = DetectionVerdict(
            ts=self.first_alarm_ts if self.first_alarm_ts is not None else window_end,
            scope=scope,
            detector=DetectorName.CUSUM,
            score=self.window_score,
            alarmed=self.window_alarmed,
        )
        self.window_alarmed = False
        self.window_score = 0.0
        self.first_alarm_ts = None
        return verdict


def run_detection(
    events: Sequence[SignalingEvent],
    cdrs: Sequence[ChargingDataRecord] = (),
    config: DetectorConfig = DetectorConfig(),
    t_end: Optional[float] = None,
) -> Tuple[List[Alert], List[DetectionVerdict]]:
    """Detect attacks in a trace; returns (alerts, every per-window verdict).

    Deterministic for a fixed config seed. Windows that overlap the
    training prefix emit no verdicts.
    """
    scope = Scope.network()
    horizon = t_end
    if horizon is None:
        tails = [s[-1] for s in ([e.ts for e in events], [c.start_ts for c in cdrs]) if s]
        horizon = max(tails) if tails else config.training_seconds

    train_times = [e.ts for e in events if e.ts < config.training_seconds]
    lam0 = config.lambda0 if config.lambda0 is not None else _estimate_rate(
        train_times, config.training_seconds
    )
    lam1 = lam0 * config.lambda1_ratio
    threshold = config.threshold
    if threshold is None:
        threshold = calibrate_threshold(lam0, lam1, config.far_target,
                                        config.calib_samples, config.seed)
    signaling = _Channel(
        CusumState(lambda0=lam0, lambda1=lam1, threshold_h=threshold),
        last_ts=config.training_seconds,
    )

    premium_cdrs = [c for c in cdrs if c.service is Service.PREMIUM_SMS]
    premium: Optional[_Channel] = None
    if config.monitor_premium:
        premium_train = [c.start_ts for c in premium_cdrs if c.start_ts < config.training_seconds]
        try:
            lam0_premium = max(_estimate_rate(premium_train, config.training_seconds),
                               config.premium_lambda0_floor)
        except InsufficientData:
            lam0_premium = config.premium_lambda0_floor
        lam1_premium = lam0_premium * config.lambda1_ratio
        threshold_premium = config.threshold
        if threshold_premium is None:
            threshold_premium = calibrate_threshold(
                lam0_premium, lam1_premium, config.far_target,
                config.calib_samples, config.seed + 1,
            )
        premium = _Channel(
            CusumState(lambda0=lam0_premium, lambda1=lam1_premium,
                       threshold_h=threshold_premium),
            last_ts=config.training_seconds,
        )

    model = load_model(config.rnn_model_path) if config.rnn_model_path else None

    windows = windowize(events, config.window_width, config.stride,
                        scope=scope, cdrs=cdrs, t_end=horizon)
    alerts: List[Alert] = []
    verdicts: List[DetectionVerdict] = []
    for window in windows:
        if window.start < config.training_seconds:
            continue
        window_verdicts = []
        for ev in window.events:
            signaling.observe(ev.ts, scope)
        window_verdicts.append(signaling.close_window(window.end, scope))
        if premium is not None:
            for cdr in window.cdrs:
                if cdr.service is Service.PREMIUM_SMS:
                    premium.observe(cdr.start_ts, scope)
            window_verdicts.append(premium.close_window(window.end, scope))

        fv = extract_features(window)
        if model is not None:
            q = rnn_fixed_point(model, fv)
            score = float(q[model.output_neurons[1]])
            window_verdicts.append(
                DetectionVerdict(ts=window.end, scope=scope,
                                 detector=DetectorName.RNN,
                                 score=score, alarmed=score >= 0.5)
            )

        verdicts.extend(window_verdicts)
        alert = fuse(window_verdicts, fv, config.fusion_policy(),
                     alert_id=len(alerts) + 1)
        if alert is not None:
            alerts.append(alert)
    return alerts, verdicts


def write_alerts_jsonl(path, alerts: Sequence[Alert]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for alert in alerts:
            fh.write(alert.to_json() + "\n")


def read_alerts_jsonl(path) -> List[Alert]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(Alert.from_doc(json.loads(line)))
    return out
