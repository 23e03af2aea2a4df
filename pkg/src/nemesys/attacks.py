"""Attacker behavior injected into scenarios.

Three kinds: a signaling storm (bots ping just often enough to force a
full channel allocate/release cycle each time), a botnet signaling DDoS
(many storm bots with jittered phases), and premium-rate fraud (silent
premium SMS billing with no control-plane footprint).
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from ._rng import stream
from .errors import MalformedConfig, PeriodTooShort, UnknownUE, WindowOutOfHorizon
from .netsim.types import RrcParams, Scenario

# One storm ping carries a token payload, far below any DCH threshold.
PING_BYTES = 1


class AttackKind(str, Enum):
    SIGNALING_STORM = "SIGNALING_STORM"
    BOTNET_SIGNALING_DDOS = "BOTNET_SIGNALING_DDOS"
    PREMIUM_FRAUD = "PREMIUM_FRAUD"


@dataclass(frozen=True)
class AttackSpec:
    kind: AttackKind
    start: float
    stop: float
    bot_ids: Tuple[str, ...] = ()
    bot_count: Optional[int] = None  # alternative to an explicit bot list
    ping_period: Optional[float] = None  # storm / ddos
    jitter: float = 0.25  # ddos: phase jitter as a fraction of the period
    messages_per_hour: Optional[float] = None  # fraud
    premium_peer: Optional[str] = None  # fraud

    def __post_init__(self):
        if self.start < 0 or self.stop <= self.start:
            raise MalformedConfig(f"attack window [{self.start}, {self.stop}) is empty or negative")
        if self.kind in (AttackKind.SIGNALING_STORM, AttackKind.BOTNET_SIGNALING_DDOS):
            if self.ping_period is None or self.ping_period <= 0:
                raise MalformedConfig(f"{self.kind.value} requires ping_period > 0")
        if self.kind is AttackKind.BOTNET_SIGNALING_DDOS:
            if not (0.0 <= self.jitter <= 1.0):
                raise MalformedConfig("jitter must be in [0, 1]")
        if self.kind is AttackKind.PREMIUM_FRAUD:
            if self.messages_per_hour is None or self.messages_per_hour <= 0:
                raise MalformedConfig("PREMIUM_FRAUD requires messages_per_hour > 0")
            if not self.premium_peer:
                raise MalformedConfig("PREMIUM_FRAUD requires premium_peer")

    @classmethod
    def from_config(cls, doc: dict) -> "AttackSpec":
        try:
            kind = AttackKind(doc["kind"])
        except (KeyError, ValueError):
            raise MalformedConfig(f"attack kind missing or unknown in {doc!r}") from None
        known = {"kind", "start", "stop", "bots", "bot_count", "ping_period",
                 "jitter", "messages_per_hour", "premium_peer"}
        extra = set(doc) - known
        if extra:
            raise MalformedConfig(f"unknown attack fields: {sorted(extra)}")
        try:
            return cls(
                kind=kind,
                start=float(doc["start"]),
                stop=float(doc["stop"]),
                bot_ids=tuple(doc.get("bots", ())),
                bot_count=doc.get("bot_count"),
                ping_period=doc.get("ping_period"),
                jitter=float(doc.get("jitter", 0.25)),
                messages_per_hour=doc.get("messages_per_hour"),
                premium_peer=doc.get("premium_peer"),
            )
        except KeyError as exc:
            raise MalformedConfig(f"attack is missing field {exc}") from None


def resolve_bots(scenario: Scenario, spec: AttackSpec) -> Tuple[str, ...]:
    """The bot set actually used: explicit ids, or the first bot_count UEs."""
    if spec.bot_ids:
        return spec.bot_ids
    if spec.bot_count:
        ids = [ue.ue_id for ue in scenario.ues]
        if spec.bot_count > len(ids):
            raise UnknownUE(f"bot_count {spec.bot_count} exceeds population {len(ids)}")
        return tuple(ids[: spec.bot_count])
    raise MalformedConfig("attack needs bots or bot_count")


def apply_attack(scenario: Scenario, spec: AttackSpec) -> Scenario:
    """Return a scenario with the attack scheduled and its bots marked infected."""
    if spec.stop > scenario.horizon:
        raise WindowOutOfHorizon(
            f"attack stops at {spec.stop} but horizon is {scenario.horizon}"
        )
    known = {ue.ue_id for ue in scenario.ues}
    for bot in spec.bot_ids:
        if bot not in known:
            raise UnknownUE(f"attack references unknown UE {bot!r}")
    bots = set(resolve_bots(scenario, spec))
    ues = tuple(
        ue.evolve(infected=True) if ue.ue_id in bots else ue for ue in scenario.ues
    )
    return replace(scenario, ues=ues, attacks=scenario.attacks + (spec,))


def storm_signaling_rate(params: RrcParams, ping_period: float) -> float:
    """Steady-state per-bot message rate of a storm with small pings.

    Each ping promotes IDLE->FACH and, one FACH timeout later, the channel
    drops back, so a full cycle costs promote + demote messages.
    """
    if ping_period <= params.t_fach_inactivity:
        raise PeriodTooShort(
            f"ping_period {ping_period} must exceed t_fach_inactivity "
            f"{params.t_fach_inactivity} for the cycle to complete"
        )
    return (params.promote_i2f_cost + params.demote_f2i_cost) / ping_period


def ping_schedule(scenario: Scenario, spec: AttackSpec, spec_index: int) -> Dict[str, np.ndarray]:
    """Per-bot ping times in [start, stop).

    Storm bots are spread evenly across the period (independent infected
    devices); DDoS bots share phase zero plus uniform jitter, modeling a
    command-and-control trigger. All draws come from a dedicated stream so
    removing the attack leaves every other stream untouched.
    """
    bots = sorted(resolve_bots(scenario, spec))
    period = float(spec.ping_period)
    width = spec.stop - spec.start
    rng = stream(scenario.seed, "attack", spec_index, "phase")
    schedule: Dict[str, np.ndarray] = {}
    for i, bot in enumerate(bots):
        if spec.kind is AttackKind.SIGNALING_STORM:
            phase = (i / len(bots)) * period
        else:
            phase = float(rng.uniform(0.0, spec.jitter * period))
        n = int(np.ceil((width - phase) / period)) if phase < width else 0
        times = spec.start + phase + period * np.arange(n)
        schedule[bot] = times[times < spec.stop]
    return schedule


def fraud_schedule(scenario: Scenario, spec: AttackSpec, spec_index: int) -> Dict[str, np.ndarray]:
    """Per-bot premium-SMS times: a Poisson process inside the window."""
    bots = sorted(resolve_bots(scenario, spec))
    rate = spec.messages_per_hour / 3600.0
    schedule: Dict[str, np.ndarray] = {}
    for bot in bots:
        rng = stream(scenario.seed, "attack", spec_index, "fraud", bot)
        times = []
        t = spec.start
        while True:
            t += float(rng.exponential(1.0 / rate))
            if t >= spec.stop:
                break
            times.append(t)
        schedule[bot] = np.asarray(times)
    return schedule
