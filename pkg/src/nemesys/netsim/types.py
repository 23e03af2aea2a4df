"""Core domain types for the control-plane simulator."""

from dataclasses import dataclass, field, replace
from decimal import Decimal
from enum import Enum
from typing import Optional

import numpy as np

from ..errors import MalformedConfig


class RrcState(str, Enum):
    IDLE = "IDLE"
    FACH = "FACH"
    DCH = "DCH"


class EventKind(str, Enum):
    ATTACH = "ATTACH"
    DETACH = "DETACH"
    PROMOTE_I2F = "PROMOTE_I2F"
    PROMOTE_F2D = "PROMOTE_F2D"
    DEMOTE_D2F = "DEMOTE_D2F"
    DEMOTE_F2I = "DEMOTE_F2I"
    PAGING = "PAGING"


class Service(str, Enum):
    VOICE = "VOICE"
    DATA = "DATA"
    SMS = "SMS"
    PREMIUM_SMS = "PREMIUM_SMS"


class ProfileKind(str, Enum):
    WEB = "WEB"
    MESSAGING = "MESSAGING"
    IDLE_HEAVY = "IDLE_HEAVY"
    STREAMING = "STREAMING"


# Fixed message cost for control-plane events that are not channel
# promotions/demotions (those carry the configured costs).
BASE_EVENT_COST = 1


@dataclass(frozen=True)
class RrcParams:
    """Channel state machine parameters: transition message costs and timers."""

    promote_i2f_cost: int = 3
    promote_f2d_cost: int = 2
    demote_d2f_cost: int = 2
    demote_f2i_cost: int = 2
    dch_volume_threshold: int = 100_000  # bytes buffered before DCH promotion
    t_dch_inactivity: float = 5.0  # seconds
    t_fach_inactivity: float = 12.0  # seconds

    def __post_init__(self):
        for name in ("promote_i2f_cost", "promote_f2d_cost", "demote_d2f_cost", "demote_f2i_cost"):
            if int(getattr(self, name)) < 1:
                raise MalformedConfig(f"rrc.{name} must be >= 1")
        if self.dch_volume_threshold <= 0:
            raise MalformedConfig("rrc.dch_volume_threshold must be > 0")
        if self.t_dch_inactivity <= 0 or self.t_fach_inactivity <= 0:
            raise MalformedConfig("rrc timers must be > 0")


@dataclass(frozen=True)
class DistSpec:
    """Serializable one-dimensional distribution: constant, exponential,
    uniform or lognormal."""

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in ("constant", "exponential", "uniform", "lognormal"):
            raise MalformedConfig(f"unknown distribution kind {self.kind!r}")

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "constant":
            return float(self.params[0])
        if self.kind == "exponential":
            return float(rng.exponential(self.params[0]))
        if self.kind == "uniform":
            lo, hi = self.params
            return float(rng.uniform(lo, hi))
        mu, sigma = self.params
        return float(rng.lognormal(mu, sigma))

    def to_config(self) -> dict:
        return {"dist": self.kind, "params": list(self.params)}

    @classmethod
    def from_config(cls, doc) -> "DistSpec":
        if isinstance(doc, (int, float)):
            return cls("constant", (float(doc),))
        try:
            return cls(str(doc["dist"]), tuple(float(p) for p in doc["params"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedConfig(f"bad distribution spec {doc!r}: {exc}") from None


@dataclass(frozen=True)
class TrafficProfile:
    kind: ProfileKind
    session_rate: float  # sessions per hour
    session_size: DistSpec  # bytes
    think_time: DistSpec  # seconds; doubles as billed session duration
    diurnal_shape: tuple  # 24 hourly weights, mean 1

    def __post_init__(self):
        if self.session_rate < 0:
            raise MalformedConfig("session_rate must be >= 0")
        if len(self.diurnal_shape) != 24:
            raise MalformedConfig("diurnal_shape needs exactly 24 bins")
        total = float(sum(self.diurnal_shape))
        if abs(total - 24.0) > 1e-9:
            raise MalformedConfig(f"diurnal_shape must sum to 24, got {total!r}")


@dataclass
class UEState:
    ue_id: str
    profile: TrafficProfile
    cell_id: str = "c0"
    rrc: RrcState = RrcState.IDLE
    last_activity_ts: float = 0.0
    pending_bytes: int = 0
    infected: bool = False

    def evolve(self, **changes) -> "UEState":
        return replace(self, **changes)


@dataclass(frozen=True)
class SignalingEvent:
    ts: float  # simulated seconds
    ue_id: str
    kind: EventKind
    cell_id: str
    cost: int

    @property
    def ts_ms(self) -> int:
        return int(round(self.ts * 1000.0))


@dataclass(frozen=True)
class ChargingDataRecord:
    record_id: int
    ue_id: str  # keyed hash of the real identity
    service: Service
    start_ts: float
    duration: float
    bytes_up: int
    bytes_down: int
    peer: str
    charge_units: Decimal
    cell_id: str

    @property
    def start_ts_ms(self) -> int:
        return int(round(self.start_ts * 1000.0))


@dataclass
class QueueStation:
    """Single FIFO server with exponential service.

    ``area_under_n`` integrates the number-in-system over time, so the
    time-average occupancy over ``[0, clock]`` is ``area_under_n / clock``.
    """

    station_id: str
    service_rate: float  # messages per second
    clock: float = 0.0
    served_count: int = 0
    arrived_count: int = 0
    area_under_n: float = 0.0
    # messages in system: parallel arrays of (arrival_ts, assigned completion_ts)
    _pending_arrivals: list = field(default_factory=list)
    _pending_completions: list = field(default_factory=list)
    _last_completion: float = 0.0
    _rng: Optional[np.random.Generator] = None

    def __post_init__(self):
        if self.service_rate <= 0:
            raise MalformedConfig(f"station {self.station_id}: service_rate must be > 0")

    @property
    def queue(self) -> tuple:
        """Arrival timestamps of messages currently in the system, FIFO order."""
        return tuple(self._pending_arrivals)

    @property
    def time_average_occupancy(self) -> float:
        return self.area_under_n / self.clock if self.clock > 0 else 0.0


@dataclass(frozen=True)
class Scenario:
    seed: int
    horizon: float
    ues: tuple  # of UEState
    rrc: RrcParams
    stations: tuple  # of QueueStation (templates; engine copies before running)
    routing: dict  # EventKind -> station_id
    attacks: tuple  # of attacks.AttackSpec
    cdr_hash_key: bytes
    tariffs: dict  # Service -> Decimal, units per usage unit
    stats_interval: float = 10.0
