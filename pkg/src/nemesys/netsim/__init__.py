"""Deterministic discrete-event simulator of a mobile core's control plane.

UE populations drive a three-state radio-channel machine; signaling
messages load a queueing network of core stations; completed sessions
emit anonymized billing records.
"""

from .types import (
    ChargingDataRecord,
    EventKind,
    ProfileKind,
    QueueStation,
    RrcParams,
    RrcState,
    Scenario,
    Service,
    SignalingEvent,
    TrafficProfile,
    UEState,
)
from .profiles import synth_profile
from .rrc import DataArrival, TimerTick, rrc_step
from .queueing import station_advance
from .cdr import SessionRecord, emit_cdr
from .scenario import build_scenario, load_scenario
from .engine import TraceSet, run
from . import io

__all__ = [
    "ChargingDataRecord",
    "DataArrival",
    "EventKind",
    "ProfileKind",
    "QueueStation",
    "RrcParams",
    "RrcState",
    "Scenario",
    "Service",
    "SessionRecord",
    "SignalingEvent",
    "TimerTick",
    "TraceSet",
    "TrafficProfile",
    "UEState",
    "build_scenario",
    "emit_cdr",
    "io",
    "load_scenario",
    "rrc_step",
    "run",
    "station_advance",
    "synth_profile",
]
