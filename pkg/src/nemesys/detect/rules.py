"""Attack-class labeling rules and verdict fusion."""

from dataclasses import dataclass
from typing import List, Optional, Sequence

from ..errors import MixedScopes
from ..features import FeatureVector
from .verdicts import Alert, AttackClass, DetectionVerdict


@dataclass(frozen=True)
class ClassifyConfig:
    """Rule thresholds; all configurable, defaults sized for desk scale.

    A storm signature is a balanced promote/demote mix at a high promotion
    rate with essentially no DCH promotions (storm pings are tiny, so they
    never escalate past FACH; real traffic bursts do).
    """

    ratio_low: float = 0.6
    ratio_high: float = 1.5
    min_promote_rate: float = 0.5  # PROMOTE_I2F events/second
    max_f2d_share: float = 0.25  # of the I2F rate
    botnet_ue_quota: int = 1000  # distinct active UEs before a storm counts as a botnet
    premium_rate_threshold: float = 0.05  # charge units/second


def classify(
    features: FeatureVector,
    verdicts: Sequence[DetectionVerdict],
    config: ClassifyConfig = ClassifyConfig(),
) -> AttackClass:
    """Label the window; NORMAL unless some detector alarmed."""
    if not any(v.alarmed for v in verdicts):
        return AttackClass.NORMAL

    i2f = features.rate_by_kind.get("PROMOTE_I2F", 0.0)
    f2d = features.rate_by_kind.get("PROMOTE_F2D", 0.0)
    storm_signature = (
        config.ratio_low <= features.promote_demote_ratio <= config.ratio_high
        and i2f >= config.min_promote_rate
        and f2d <= config.max_f2d_share * i2f
    )
    if storm_signature:
        if features.active_ue_count > config.botnet_ue_quota:
            return AttackClass.BOTNET_SIGNALING_DDOS
        return AttackClass.SIGNALING_STORM
    if features.premium_charge_rate >= config.premium_rate_threshold:
        return AttackClass.PREMIUM_FRAUD
    return AttackClass.UNKNOWN


@dataclass(frozen=True)
class FusionPolicy:
    """OR fusion with noisy-OR confidence over the alarmed detectors."""

    classify_config: ClassifyConfig = ClassifyConfig()


def fuse(
    verdicts: Sequence[DetectionVerdict],
    features: FeatureVector,
    policy: FusionPolicy = FusionPolicy(),
    alert_id: int = 0,
) -> Optional[Alert]:
    """Combine one window's verdicts into an alert, or nothing."""
    if not verdicts:
        return None
    scopes = {v.scope for v in verdicts}
    if len(scopes) > 1:
        raise MixedScopes(f"verdicts span scopes {sorted(s.label() for s in scopes)}")
    alarmed: List[DetectionVerdict] = [v for v in verdicts if v.alarmed]
    if not alarmed:
        return None
    miss = 1.0
    for v in alarmed:
        miss *= 1.0 - min(1.0, max(0.0, v.score))
    confidence = min(1.0, max(0.0, 1.0 - miss))
    return Alert(
        alert_id=alert_id,
        ts=max(v.ts for v in alarmed),
        scope=alarmed[0].scope,
        attack_class=classify(features, verdicts, policy.classify_config),
        confidence=confidence,
        contributing=tuple(verdicts),
    )
