"""Detector outputs and analyst-facing alerts."""

import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

from ..features import Scope


class DetectorName(str, Enum):
    CUSUM = "CUSUM"
    RNN = "RNN"


class AttackClass(str, Enum):
    NORMAL = "NORMAL"
    SIGNALING_STORM = "SIGNALING_STORM"
    BOTNET_SIGNALING_DDOS = "BOTNET_SIGNALING_DDOS"
    PREMIUM_FRAUD = "PREMIUM_FRAUD"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True)
class DetectionVerdict:
    ts: float
    scope: Scope
    detector: DetectorName
    score: float
    alarmed: bool

    def to_doc(self) -> dict:
        return {
            "ts_ms": int(round(self.ts * 1000)),
            "scope": self.scope.label(),
            "detector": self.detector.value,
            "score": self.score,
            "alarmed": self.alarmed,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "DetectionVerdict":
        return cls(
            ts=doc["ts_ms"] / 1000.0,
            scope=Scope.from_label(doc["scope"]),
            detector=DetectorName(doc["detector"]),
            score=doc["score"],
            alarmed=doc["alarmed"],
        )


@dataclass(frozen=True)
class Alert:
    alert_id: int
    ts: float
    scope: Scope
    attack_class: AttackClass
    confidence: float
    contributing: Tuple[DetectionVerdict, ...]
    acked: bool = False

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.attack_class is AttackClass.NORMAL:
            raise ValueError("NORMAL is never emitted as an alert")

    def with_id(self, alert_id: int) -> "Alert":
        return replace(self, alert_id=alert_id)

    def with_acked(self) -> "Alert":
        return replace(self, acked=True)

    def to_doc(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "ts_ms": int(round(self.ts * 1000)),
            "scope": self.scope.label(),
            "attack_class": self.attack_class.value,
            "confidence": self.confidence,
            "contributing": [v.to_doc() for v in self.contributing],
            "acked": self.acked,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), separators=(",", ":"))

    @classmethod
    def from_doc(cls, doc: dict) -> "Alert":
        return cls(
            alert_id=doc["alert_id"],
            ts=doc["ts_ms"] / 1000.0,
            scope=Scope.from_label(doc["scope"]),
            attack_class=AttackClass(doc["attack_class"]),
            confidence=doc["confidence"],
            contributing=tuple(DetectionVerdict.from_doc(v) for v in doc["contributing"]),
            acked=doc.get("acked", False),
        )
