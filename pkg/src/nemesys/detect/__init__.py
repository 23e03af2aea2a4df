"""Change detection, neural classification, fusion and attack labeling."""

from .verdicts import Alert, AttackClass, DetectionVerdict, DetectorName
from .cusum import (
    CusumDetector,
    CusumState,
    calibrate_threshold,
    cusum_update,
    measure_alarm_rate,
    measure_detection_delay,
)
from .rnn import (
    RnnClassifier,
    RnnModel,
    load_model,
    rnn_fixed_point,
    rnn_grad,
    rnn_train,
    save_model,
)
from .rules import ClassifyConfig, FusionPolicy, classify, fuse
from .pipeline import DetectorConfig, load_detector_config, run_detection, write_alerts_jsonl

__all__ = [
    "Alert",
    "AttackClass",
    "ClassifyConfig",
    "CusumDetector",
    "CusumState",
    "DetectionVerdict",
    "DetectorConfig",
    "DetectorName",
    "FusionPolicy",
    "RnnClassifier",
    "RnnModel",
    "calibrate_threshold",
    "classify",
    "cusum_update",
    "fuse",
    "load_detector_config",
    "load_model",
    "measure_alarm_rate",
    "measure_detection_delay",
    "rnn_fixed_point",
    "rnn_grad",
    "rnn_train",
    "run_detection",
    "save_model",
    "write_alerts_jsonl",
]
